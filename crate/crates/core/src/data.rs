//! Dataset representation, ARFF/CSV ingestion, normalization,
//! nominal-to-binary encoding and stratified fold splitting.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attribute type: continuous or a fixed category list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttributeKind {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub index: usize,
    pub kind: AttributeKind,
}

impl AttributeSchema {
    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric)
    }

    pub fn is_nominal(&self) -> bool {
        !self.is_numeric()
    }

    pub fn categories(&self) -> Option<&[String]> {
        match &self.kind {
            AttributeKind::Numeric => None,
            AttributeKind::Nominal(cats) => Some(cats),
        }
    }
}

/// One dataset cell. Nominal cells store the category index into the
/// attribute's category list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Numeric(f64),
    Nominal(usize),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_numeric(&self) -> Option<f64> {
        match self {
            Cell::Numeric(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_nominal(&self) -> Option<usize> {
        match self {
            Cell::Nominal(c) => Some(*c),
            _ => None,
        }
    }
}

/// Immutable table of instances with a declared schema and a nominal class
/// attribute. All operations return new datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Vec<AttributeSchema>,
    class_index: usize,
    instances: Vec<Vec<Cell>>,
}

impl Dataset {
    pub fn new(
        schema: Vec<AttributeSchema>,
        class_index: usize,
        instances: Vec<Vec<Cell>>,
    ) -> Result<Self> {
        if schema.is_empty() {
            return Err(Error::SchemaMismatch("schema has no attributes".into()));
        }
        for (i, attr) in schema.iter().enumerate() {
            if attr.index != i {
                return Err(Error::SchemaMismatch(format!(
                    "attribute '{}' has index {} but sits at position {}",
                    attr.name, attr.index, i
                )));
            }
            if let AttributeKind::Nominal(cats) = &attr.kind {
                if cats.is_empty() {
                    return Err(Error::SchemaMismatch(format!(
                        "nominal attribute '{}' declares no categories",
                        attr.name
                    )));
                }
                let mut seen = cats.clone();
                seen.sort();
                seen.dedup();
                if seen.len() != cats.len() {
                    return Err(Error::SchemaMismatch(format!(
                        "nominal attribute '{}' declares duplicate categories",
                        attr.name
                    )));
                }
            }
        }
        if class_index >= schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "class index {} out of range for {} attributes",
                class_index,
                schema.len()
            )));
        }
        match schema[class_index].categories() {
            Some(cats) if cats.len() >= 2 => {}
            Some(_) => {
                return Err(Error::SchemaMismatch(
                    "class attribute needs at least 2 categories".into(),
                ))
            }
            None => {
                return Err(Error::SchemaMismatch(
                    "class attribute must be nominal".into(),
                ))
            }
        }
        for (row, cells) in instances.iter().enumerate() {
            if cells.len() != schema.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row {} has {} cells, schema has {} attributes",
                    row,
                    cells.len(),
                    schema.len()
                )));
            }
            for (attr, cell) in schema.iter().zip(cells) {
                match (&attr.kind, cell) {
                    (AttributeKind::Numeric, Cell::Nominal(_)) => {
                        return Err(Error::SchemaMismatch(format!(
                            "row {} holds a nominal cell in numeric attribute '{}'",
                            row, attr.name
                        )))
                    }
                    (AttributeKind::Nominal(cats), Cell::Nominal(c)) if *c >= cats.len() => {
                        return Err(Error::SchemaMismatch(format!(
                            "row {} references category {} of attribute '{}' ({} declared)",
                            row,
                            c,
                            attr.name,
                            cats.len()
                        )))
                    }
                    (AttributeKind::Nominal(_), Cell::Numeric(_)) => {
                        return Err(Error::SchemaMismatch(format!(
                            "row {} holds a numeric cell in nominal attribute '{}'",
                            row, attr.name
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(Dataset {
            schema,
            class_index,
            instances,
        })
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn class_attribute(&self) -> &AttributeSchema {
        &self.schema[self.class_index]
    }

    pub fn class_labels(&self) -> &[String] {
        self.class_attribute()
            .categories()
            .expect("class attribute is nominal by construction")
    }

    pub fn n_attributes(&self) -> usize {
        self.schema.len()
    }

    pub fn n_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels().len()
    }

    pub fn instances(&self) -> &[Vec<Cell>] {
        &self.instances
    }

    pub fn instance(&self, row: usize) -> &[Cell] {
        &self.instances[row]
    }

    pub fn cell(&self, row: usize, attr: usize) -> Cell {
        self.instances[row][attr]
    }

    pub fn is_missing(&self, row: usize, attr: usize) -> bool {
        self.instances[row][attr].is_missing()
    }

    /// Class category index of a row, `None` when missing.
    pub fn class_of(&self, row: usize) -> Option<usize> {
        self.instances[row][self.class_index].as_nominal()
    }

    /// New dataset holding the given rows (in the given order), same schema.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            class_index: self.class_index,
            instances: rows.iter().map(|&r| self.instances[r].clone()).collect(),
        }
    }

    fn with_instances(&self, instances: Vec<Vec<Cell>>) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            class_index: self.class_index,
            instances,
        }
    }

    /// Replace a single cell; used by imputation to fill missing entries.
    pub(crate) fn set_cell(&mut self, row: usize, attr: usize, cell: Cell) {
        self.instances[row][attr] = cell;
    }
}

/// Cross-validation split. Folds are disjoint index sets covering the whole
/// dataset, stratified by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldSplit {
    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// All indices outside the given fold, in ascending order.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Arff,
    Csv,
}

impl SourceFormat {
    /// Guess the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> SourceFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("arff") => SourceFormat::Arff,
            _ => SourceFormat::Csv,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn strip_quotes(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2
        && ((s.starts_with('\'') && s.ends_with('\'')) || (s.starts_with('"') && s.ends_with('"')))
    {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

fn parse_numeric(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("expected a number, found '{token}'")))?;
    if !v.is_finite() {
        return Err(parse_err(
            line,
            format!("non-finite numeric value '{token}'"),
        ));
    }
    Ok(v)
}

/// Split a data line on commas, honoring single/double quotes.
fn split_row(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    for ch in line.chars() {
        match quote {
            Some(q) => {
                if ch == q {
                    quote = None;
                } else {
                    cur.push(ch);
                }
            }
            None => match ch {
                '\'' | '"' => quote = Some(ch),
                ',' => {
                    fields.push(cur.trim().to_string());
                    cur = String::new();
                }
                _ => cur.push(ch),
            },
        }
    }
    fields.push(cur.trim().to_string());
    fields
}

/// Load a dataset from a stream. `class_index = None` selects the last
/// attribute. `'?'` marks a missing cell in both formats.
pub fn load_dataset<R: BufRead>(
    source: R,
    format: SourceFormat,
    class_index: Option<usize>,
) -> Result<Dataset> {
    match format {
        SourceFormat::Arff => load_arff(source, class_index),
        SourceFormat::Csv => load_csv(source, class_index),
    }
}

/// Load from a filesystem path, guessing the format from the extension.
pub fn load_dataset_path(path: &Path, class_index: Option<usize>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    load_dataset(
        BufReader::new(file),
        SourceFormat::from_path(path),
        class_index,
    )
}

fn load_arff<R: BufRead>(source: R, class_index: Option<usize>) -> Result<Dataset> {
    let mut schema: Vec<AttributeSchema> = Vec::new();
    let mut instances: Vec<Vec<Cell>> = Vec::new();
    let mut in_data = false;

    for (lineno, line) in source.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io("reading ARFF stream", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = trimmed.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                continue;
            } else if lower.starts_with("@attribute") {
                let rest = trimmed["@attribute".len()..].trim();
                schema.push(parse_arff_attribute(rest, schema.len(), lineno)?);
            } else if lower.starts_with("@data") {
                if schema.is_empty() {
                    return Err(parse_err(lineno, "@data before any @attribute"));
                }
                in_data = true;
            } else {
                return Err(parse_err(
                    lineno,
                    format!("unrecognized header directive '{trimmed}'"),
                ));
            }
        } else {
            instances.push(parse_row(&split_row(trimmed), &schema, lineno)?);
        }
    }
    if !in_data {
        return Err(parse_err(0, "no @data section found"));
    }
    let class_index = class_index.unwrap_or(schema.len().saturating_sub(1));
    Dataset::new(schema, class_index, instances)
}

fn parse_arff_attribute(rest: &str, index: usize, lineno: usize) -> Result<AttributeSchema> {
    // Name may be quoted and may contain spaces when quoted.
    let rest = rest.trim();
    let (name, spec) = if rest.starts_with('\'') || rest.starts_with('"') {
        let q = rest.chars().next().unwrap();
        let end = rest[1..]
            .find(q)
            .ok_or_else(|| parse_err(lineno, "unterminated quoted attribute name"))?;
        (rest[1..=end].to_string(), rest[end + 2..].trim())
    } else {
        let mut parts = rest.splitn(2, char::is_whitespace);
        let name = parts
            .next()
            .filter(|n| !n.is_empty())
            .ok_or_else(|| parse_err(lineno, "missing attribute name"))?;
        (name.to_string(), parts.next().unwrap_or("").trim())
    };
    if spec.is_empty() {
        return Err(parse_err(lineno, "missing attribute type"));
    }
    let kind = if spec.starts_with('{') {
        let inner = spec
            .strip_prefix('{')
            .and_then(|s| s.trim_end().strip_suffix('}'))
            .ok_or_else(|| parse_err(lineno, "unterminated nominal specification"))?;
        let cats: Vec<String> = split_row(inner)
            .into_iter()
            .map(|c| strip_quotes(&c).to_string())
            .collect();
        if cats.iter().any(|c| c.is_empty()) {
            return Err(parse_err(lineno, "empty nominal category"));
        }
        AttributeKind::Nominal(cats)
    } else {
        match spec.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => AttributeKind::Numeric,
            other => {
                return Err(parse_err(
                    lineno,
                    format!("unsupported attribute type '{other}'"),
                ))
            }
        }
    };
    Ok(AttributeSchema { name, index, kind })
}

fn parse_row(fields: &[String], schema: &[AttributeSchema], lineno: usize) -> Result<Vec<Cell>> {
    if fields.len() != schema.len() {
        return Err(parse_err(
            lineno,
            format!(
                "row has {} values, schema declares {} attributes",
                fields.len(),
                schema.len()
            ),
        ));
    }
    schema
        .iter()
        .zip(fields)
        .map(|(attr, raw)| {
            let token = strip_quotes(raw);
            if token == "?" {
                return Ok(Cell::Missing);
            }
            match &attr.kind {
                AttributeKind::Numeric => Ok(Cell::Numeric(parse_numeric(token, lineno)?)),
                AttributeKind::Nominal(cats) => cats
                    .iter()
                    .position(|c| c == token)
                    .map(Cell::Nominal)
                    .ok_or_else(|| {
                        parse_err(
                            lineno,
                            format!(
                                "value '{}' not in declared categories of attribute '{}'",
                                token, attr.name
                            ),
                        )
                    }),
            }
        })
        .collect()
}

/// CSV loader. Columns are numeric unless a directive marks them nominal:
///
/// ```text
/// #@names sepal_length,species     (optional column names)
/// #@nominal 4                      (0-based indices; categories inferred)
/// #@categories 4:a|b|c             (explicit category list for a column)
/// ```
///
/// Plain `#`-prefixed lines are comments.
fn load_csv<R: BufRead>(source: R, class_index: Option<usize>) -> Result<Dataset> {
    let mut names: Option<Vec<String>> = None;
    let mut nominal_cols: Vec<usize> = Vec::new();
    let mut declared: Vec<(usize, Vec<String>)> = Vec::new();
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();

    for (lineno, line) in source.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io("reading CSV stream", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(directive) = trimmed.strip_prefix("#@") {
            let (key, value) = directive
                .split_once(char::is_whitespace)
                .ok_or_else(|| parse_err(lineno, "directive without a value"))?;
            match key {
                "names" => {
                    names = Some(split_row(value));
                }
                "nominal" => {
                    for tok in value.split(',') {
                        let idx: usize = tok.trim().parse().map_err(|_| {
                            parse_err(lineno, format!("bad column index '{}'", tok.trim()))
                        })?;
                        nominal_cols.push(idx);
                    }
                }
                "categories" => {
                    let (idx, cats) = value.split_once(':').ok_or_else(|| {
                        parse_err(
                            lineno,
                            "expected '<index>:<cat|cat|...>' after #@categories",
                        )
                    })?;
                    let idx: usize = idx
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad column index '{idx}'")))?;
                    let cats: Vec<String> = cats.split('|').map(|c| c.trim().to_string()).collect();
                    declared.push((idx, cats));
                }
                other => {
                    return Err(parse_err(lineno, format!("unknown directive '{other}'")));
                }
            }
        } else if trimmed.starts_with('#') {
            continue;
        } else {
            rows.push((lineno, split_row(trimmed)));
        }
    }

    let (first_line, first) = rows
        .first()
        .ok_or_else(|| parse_err(0, "CSV stream has no data rows"))?;
    let n_cols = first.len();
    for (lineno, row) in &rows {
        if row.len() != n_cols {
            return Err(parse_err(
                *lineno,
                format!("row has {} values, expected {}", row.len(), n_cols),
            ));
        }
    }
    let _ = first_line;

    let class_index = class_index.unwrap_or(n_cols - 1);
    let mut is_nominal = vec![false; n_cols];
    for &c in &nominal_cols {
        if c >= n_cols {
            return Err(parse_err(
                0,
                format!("nominal directive column {c} out of range"),
            ));
        }
        is_nominal[c] = true;
    }
    for (c, _) in &declared {
        if *c >= n_cols {
            return Err(parse_err(
                0,
                format!("categories directive column {c} out of range"),
            ));
        }
        is_nominal[*c] = true;
    }
    // The class column is nominal whether or not a directive says so.
    is_nominal[class_index] = true;

    // Category lists: declared ones win, otherwise first-appearance order.
    let mut categories: Vec<Vec<String>> = vec![Vec::new(); n_cols];
    for (c, cats) in declared {
        categories[c] = cats;
    }
    for (_, row) in &rows {
        for (c, val) in row.iter().enumerate() {
            if is_nominal[c] && !categories[c].is_empty() {
                continue;
            }
            if is_nominal[c] {
                let token = strip_quotes(val);
                if token != "?" && !categories[c].iter().any(|x| x == token) {
                    categories[c].push(token.to_string());
                }
            }
        }
    }
    // Second pass so declared-but-sparse lists still pick up unseen values.
    for (_, row) in &rows {
        for (c, val) in row.iter().enumerate() {
            if !is_nominal[c] {
                continue;
            }
            let token = strip_quotes(val);
            if token != "?" && !categories[c].iter().any(|x| x == token) {
                categories[c].push(token.to_string());
            }
        }
    }

    let schema: Vec<AttributeSchema> = (0..n_cols)
        .map(|c| {
            let name = names
                .as_ref()
                .and_then(|n| n.get(c).cloned())
                .unwrap_or_else(|| format!("col_{c}"));
            let kind = if is_nominal[c] {
                AttributeKind::Nominal(categories[c].clone())
            } else {
                AttributeKind::Numeric
            };
            AttributeSchema {
                name,
                index: c,
                kind,
            }
        })
        .collect();

    let instances = rows
        .iter()
        .map(|(lineno, row)| parse_row(row, &schema, *lineno))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(schema, class_index, instances)
}

/// Write a dataset. Output is deterministic: identical dataset and format
/// give identical bytes.
pub fn save_dataset<W: Write>(d: &Dataset, format: SourceFormat, mut w: W) -> Result<()> {
    let text = match format {
        SourceFormat::Arff => render_arff(d),
        SourceFormat::Csv => render_csv(d),
    };
    w.write_all(text.as_bytes())
        .map_err(|e| Error::io("writing dataset", e))
}

pub fn save_dataset_path(d: &Dataset, path: &Path) -> Result<()> {
    let file =
        File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    save_dataset(d, SourceFormat::from_path(path), file)
}

fn needs_quoting(s: &str) -> bool {
    s.is_empty() || s.contains([' ', ',', '\'', '"', '{', '}', '%'])
}

fn quoted(s: &str) -> String {
    if needs_quoting(s) {
        format!("'{s}'")
    } else {
        s.to_string()
    }
}

fn render_cell(d: &Dataset, attr: usize, cell: &Cell) -> String {
    match cell {
        Cell::Missing => "?".to_string(),
        Cell::Numeric(v) => format!("{v}"),
        Cell::Nominal(c) => quoted(&d.schema[attr].categories().expect("nominal")[*c]),
    }
}

fn render_arff(d: &Dataset) -> String {
    let mut out = String::new();
    out.push_str("@relation dataset\n\n");
    for attr in &d.schema {
        match &attr.kind {
            AttributeKind::Numeric => {
                let _ = writeln!(out, "@attribute {} numeric", quoted(&attr.name));
            }
            AttributeKind::Nominal(cats) => {
                let list: Vec<String> = cats.iter().map(|c| quoted(c)).collect();
                let _ = writeln!(
                    out,
                    "@attribute {} {{{}}}",
                    quoted(&attr.name),
                    list.join(",")
                );
            }
        }
    }
    out.push_str("\n@data\n");
    for row in &d.instances {
        let fields: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(a, c)| render_cell(d, a, c))
            .collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

fn render_csv(d: &Dataset) -> String {
    let mut out = String::new();
    let names: Vec<String> = d.schema.iter().map(|a| a.name.clone()).collect();
    let _ = writeln!(out, "#@names {}", names.join(","));
    for attr in &d.schema {
        if let AttributeKind::Nominal(cats) = &attr.kind {
            let _ = writeln!(out, "#@categories {}:{}", attr.index, cats.join("|"));
        }
    }
    for row in &d.instances {
        let fields: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(a, c)| match c {
                Cell::Nominal(i) => d.schema[a].categories().expect("nominal")[*i].clone(),
                other => render_cell(d, a, other),
            })
            .collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// Per-attribute min/max fitted on one dataset and applied to another, so
/// cross-validation can scale test folds with training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxStats {
    per_attr: Vec<Option<(f64, f64)>>,
    class_index: usize,
}

impl MinMaxStats {
    /// Observed min/max of every numeric non-class attribute.
    pub fn fit(d: &Dataset) -> MinMaxStats {
        let per_attr = d
            .schema
            .iter()
            .map(|attr| {
                if attr.index == d.class_index || !attr.is_numeric() {
                    return None;
                }
                let mut bounds: Option<(f64, f64)> = None;
                for row in &d.instances {
                    if let Cell::Numeric(v) = row[attr.index] {
                        bounds = Some(match bounds {
                            None => (v, v),
                            Some((lo, hi)) => (lo.min(v), hi.max(v)),
                        });
                    }
                }
                bounds
            })
            .collect();
        MinMaxStats {
            per_attr,
            class_index: d.class_index,
        }
    }

    /// Rescale numeric cells to [0,1] under the fitted bounds. Constant
    /// columns map to 0; nominal and missing cells pass through.
    pub fn apply(&self, d: &Dataset) -> Dataset {
        let instances = d
            .instances
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(
                        |(a, cell)| match (self.per_attr.get(a).copied().flatten(), cell) {
                            (Some((lo, hi)), Cell::Numeric(v)) => {
                                if hi > lo {
                                    Cell::Numeric((v - lo) / (hi - lo))
                                } else {
                                    Cell::Numeric(0.0)
                                }
                            }
                            _ => *cell,
                        },
                    )
                    .collect()
            })
            .collect();
        d.with_instances(instances)
    }
}

/// Min-max rescale every numeric non-class attribute to [0,1] using its own
/// observed values.
pub fn normalize(d: &Dataset) -> Dataset {
    MinMaxStats::fit(d).apply(d)
}

/// Replace each non-class nominal attribute by numeric indicators: a single
/// 0/1 column for up to two categories, one-hot columns otherwise. Missing
/// nominal cells map to missing indicators.
pub fn nominal_to_binary(d: &Dataset) -> Dataset {
    let mut schema: Vec<AttributeSchema> = Vec::new();
    // (source attr, Some(category) for one-hot columns)
    let mut columns: Vec<(usize, Option<usize>)> = Vec::new();
    let mut class_index = 0;

    for attr in &d.schema {
        if attr.index == d.class_index {
            class_index = schema.len();
            schema.push(AttributeSchema {
                name: attr.name.clone(),
                index: schema.len(),
                kind: attr.kind.clone(),
            });
            columns.push((attr.index, None));
            continue;
        }
        match &attr.kind {
            AttributeKind::Numeric => {
                schema.push(AttributeSchema {
                    name: attr.name.clone(),
                    index: schema.len(),
                    kind: AttributeKind::Numeric,
                });
                columns.push((attr.index, None));
            }
            AttributeKind::Nominal(cats) if cats.len() <= 2 => {
                schema.push(AttributeSchema {
                    name: attr.name.clone(),
                    index: schema.len(),
                    kind: AttributeKind::Numeric,
                });
                columns.push((attr.index, Some(usize::MAX)));
            }
            AttributeKind::Nominal(cats) => {
                for (c, cat) in cats.iter().enumerate() {
                    schema.push(AttributeSchema {
                        name: format!("{}={}", attr.name, cat),
                        index: schema.len(),
                        kind: AttributeKind::Numeric,
                    });
                    columns.push((attr.index, Some(c)));
                }
            }
        }
    }

    let instances = d
        .instances
        .iter()
        .map(|row| {
            columns
                .iter()
                .map(|&(src, role)| match role {
                    None => row[src],
                    Some(target) => match row[src] {
                        Cell::Missing => Cell::Missing,
                        Cell::Nominal(c) => {
                            if target == usize::MAX {
                                Cell::Numeric(c as f64)
                            } else {
                                Cell::Numeric(if c == target { 1.0 } else { 0.0 })
                            }
                        }
                        Cell::Numeric(_) => unreachable!("indicator source is nominal"),
                    },
                })
                .collect()
        })
        .collect();

    Dataset {
        schema,
        class_index,
        instances,
    }
}

/// Stratified k-fold split: per-class counts across folds differ by at most
/// one, and the split is a deterministic function of the seed.
pub fn stratified_folds(d: &Dataset, k: usize, seed: u64) -> Result<FoldSplit> {
    let n = d.n_instances();
    if k < 2 {
        return Err(Error::InvalidConfig(format!("fold count {k} must be >= 2")));
    }
    if k > n {
        return Err(Error::InvalidConfig(format!(
            "fold count {k} exceeds instance count {n}"
        )));
    }
    for row in 0..n {
        if d.class_of(row).is_none() {
            return Err(Error::MissingClass { row });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.n_classes()];
    for row in 0..n {
        by_class[d.class_of(row).unwrap()].push(row);
    }

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    // Round-robin within each class; the dealing position carries across
    // classes so fold sizes stay balanced overall.
    let mut next_fold = 0usize;
    for indices in by_class.iter_mut() {
        indices.shuffle(&mut rng);
        for &row in indices.iter() {
            folds[next_fold].push(row);
            next_fold = (next_fold + 1) % k;
        }
    }
    for fold in folds.iter_mut() {
        fold.sort_unstable();
    }
    Ok(FoldSplit { folds, seed })
}

/// Keep only instances whose class cell is observed, preserving order.
pub fn drop_missing_class(d: &Dataset) -> Result<Dataset> {
    let instances: Vec<Vec<Cell>> = d
        .instances
        .iter()
        .filter(|row| !row[d.class_index].is_missing())
        .cloned()
        .collect();
    if instances.is_empty() {
        return Err(Error::EmptyInput(
            "every instance has a missing class value".into(),
        ));
    }
    Ok(d.with_instances(instances))
}

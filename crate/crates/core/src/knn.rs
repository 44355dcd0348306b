//! k-nearest-neighbour classification with distance-based vote weighting
//! and missing-value distance semantics.

use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, AttributeSchema, Cell, Dataset};
use crate::error::{Error, Result};

/// How neighbour votes are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteWeighting {
    /// Every neighbour counts 1.
    #[serde(rename = "uniform")]
    Uniform,
    /// Weight 1/d. Zero-distance neighbours take the whole vote, split
    /// equally among themselves.
    #[serde(rename = "inverse")]
    InverseDistance,
    /// Weight max(0, 1-d). Falls back to uniform when every selected
    /// neighbour weighs zero.
    #[serde(rename = "complement")]
    ComplementDistance,
}

impl std::str::FromStr for VoteWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<VoteWeighting> {
        match s {
            "uniform" => Ok(VoteWeighting::Uniform),
            "inverse" => Ok(VoteWeighting::InverseDistance),
            "complement" => Ok(VoteWeighting::ComplementDistance),
            other => Err(Error::InvalidConfig(format!(
                "unknown vote weighting '{other}'; expected uniform, inverse, or complement"
            ))),
        }
    }
}

impl VoteWeighting {
    pub fn label(&self) -> &'static str {
        match self {
            VoteWeighting::Uniform => "uniform",
            VoteWeighting::InverseDistance => "inverse",
            VoteWeighting::ComplementDistance => "complement",
        }
    }
}

/// Neighbour count and vote weighting. `k` must be odd (ties in the class
/// vote are still possible with weighted votes or more than two classes, and
/// resolve to the lowest class index) and at most the training-set size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub weighting: VoteWeighting,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: 1,
            weighting: VoteWeighting::Uniform,
        }
    }
}

/// Per-class nonnegative vote weights produced by a classifier; at least one
/// weight is positive. Probabilities are the weights divided by their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    weights: Vec<f64>,
}

impl ClassDistribution {
    pub(crate) fn from_votes(weights: Vec<f64>) -> ClassDistribution {
        debug_assert!(weights.iter().all(|w| *w >= 0.0));
        debug_assert!(weights.iter().any(|w| *w > 0.0));
        ClassDistribution { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    pub fn into_probabilities(self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.into_iter().map(|w| w / total).collect()
    }

    /// Index of the largest weight; ties go to the lowest class index.
    pub fn predicted(&self) -> usize {
        let mut best = 0;
        for (c, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = c;
            }
        }
        best
    }
}

/// Distance between two instances over the non-class attributes: the
/// Euclidean norm of per-attribute differences, where
///
/// * numeric, both present: `|a - b|` (attributes are assumed scaled to [0,1])
/// * nominal, both present: 0 if equal, 1 otherwise
/// * both missing: 1
/// * one missing: 1 for nominal; `max(v, 1-v)` for numeric with present `v`
pub fn distance(
    schema: &[AttributeSchema],
    class_index: usize,
    a: &[Cell],
    b: &[Cell],
) -> Result<f64> {
    if a.len() != schema.len() || b.len() != schema.len() {
        return Err(Error::SchemaMismatch(format!(
            "instances of length {} and {} against {} attributes",
            a.len(),
            b.len(),
            schema.len()
        )));
    }
    let mut sum = 0.0;
    for (i, attr) in schema.iter().enumerate() {
        if i == class_index {
            continue;
        }
        let d = delta(attr, &a[i], &b[i])?;
        sum += d * d;
    }
    Ok(sum.sqrt())
}

fn delta(attr: &AttributeSchema, a: &Cell, b: &Cell) -> Result<f64> {
    match (&attr.kind, a, b) {
        (_, Cell::Missing, Cell::Missing) => Ok(1.0),
        (AttributeKind::Numeric, Cell::Numeric(x), Cell::Numeric(y)) => Ok((x - y).abs()),
        (AttributeKind::Numeric, Cell::Numeric(v), Cell::Missing)
        | (AttributeKind::Numeric, Cell::Missing, Cell::Numeric(v)) => Ok(v.max(1.0 - v)),
        (AttributeKind::Nominal(_), Cell::Nominal(x), Cell::Nominal(y)) => {
            Ok(if x == y { 0.0 } else { 1.0 })
        }
        (AttributeKind::Nominal(_), Cell::Nominal(_), Cell::Missing)
        | (AttributeKind::Nominal(_), Cell::Missing, Cell::Nominal(_)) => Ok(1.0),
        _ => Err(Error::SchemaMismatch(format!(
            "cell type does not match attribute '{}'",
            attr.name
        ))),
    }
}

/// Instance-based classifier over an owned training set.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    train: Dataset,
    config: KnnConfig,
}

impl KnnClassifier {
    pub fn new(train: Dataset, config: KnnConfig) -> Result<KnnClassifier> {
        if train.n_instances() == 0 {
            return Err(Error::EmptyInput("knn training set is empty".into()));
        }
        for row in 0..train.n_instances() {
            if train.class_of(row).is_none() {
                return Err(Error::MissingClass { row });
            }
        }
        if config.k == 0 || config.k.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "k = {} is invalid: the neighbour count must be an odd number >= 1",
                config.k
            )));
        }
        if config.k > train.n_instances() {
            return Err(Error::InvalidConfig(format!(
                "k = {} exceeds the training-set size {}; choose a smaller k",
                config.k,
                train.n_instances()
            )));
        }
        Ok(KnnClassifier { train, config })
    }

    pub fn config(&self) -> &KnnConfig {
        &self.config
    }

    pub fn train_data(&self) -> &Dataset {
        &self.train
    }

    /// Vote shares over classes for one instance. The instance's own class
    /// cell is ignored.
    pub fn classify(&self, instance: &[Cell]) -> Result<ClassDistribution> {
        let schema = self.train.schema();
        let class_index = self.train.class_index();
        let n = self.train.n_instances();

        let mut neighbours: Vec<(f64, usize)> = Vec::with_capacity(n);
        for row in 0..n {
            let d = distance(schema, class_index, instance, self.train.instance(row))?;
            neighbours.push((d, row));
        }
        // Ties on distance resolve to the lower training index.
        neighbours.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let selected = &neighbours[..self.config.k];

        let mut votes = vec![0.0; self.train.n_classes()];
        let class_of = |row: usize| self.train.class_of(row).expect("checked in new");
        match self.config.weighting {
            VoteWeighting::Uniform => {
                for &(_, row) in selected {
                    votes[class_of(row)] += 1.0;
                }
            }
            VoteWeighting::InverseDistance => {
                if selected.iter().any(|&(d, _)| d == 0.0) {
                    for &(d, row) in selected.iter().filter(|&&(d, _)| d == 0.0) {
                        let _ = d;
                        votes[class_of(row)] += 1.0;
                    }
                } else {
                    for &(d, row) in selected {
                        votes[class_of(row)] += 1.0 / d;
                    }
                }
            }
            VoteWeighting::ComplementDistance => {
                let mut any = false;
                for &(d, row) in selected {
                    let w = (1.0 - d).max(0.0);
                    votes[class_of(row)] += w;
                    any |= w > 0.0;
                }
                if !any {
                    for &(_, row) in selected {
                        votes[class_of(row)] += 1.0;
                    }
                }
            }
        }
        Ok(ClassDistribution::from_votes(votes))
    }

    pub fn predict(&self, instance: &[Cell]) -> Result<usize> {
        Ok(self.classify(instance)?.predicted())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_dataset, SourceFormat};
    use approx::assert_abs_diff_eq;
    use std::io::Cursor;

    fn line_dataset() -> Dataset {
        let text = "@relation t\n@attribute x numeric\n@attribute c {a,b}\n@data\n\
                    0.0,a\n0.5,b\n1.0,a\n";
        load_dataset(Cursor::new(text), SourceFormat::Arff, None).unwrap()
    }

    fn query(x: f64) -> Vec<Cell> {
        vec![Cell::Numeric(x), Cell::Missing]
    }

    #[test]
    fn nearest_neighbour_wins_k1() {
        let c = KnnClassifier::new(line_dataset(), KnnConfig::default()).unwrap();
        assert_eq!(c.predict(&query(0.4)).unwrap(), 1);
        assert_eq!(c.predict(&query(0.9)).unwrap(), 0);
    }

    #[test]
    fn uniform_votes_k3() {
        let cfg = KnnConfig {
            k: 3,
            weighting: VoteWeighting::Uniform,
        };
        let c = KnnClassifier::new(line_dataset(), cfg).unwrap();
        let dist = c.classify(&query(0.4)).unwrap();
        assert_abs_diff_eq!(dist.probabilities()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(dist.predicted(), 0);
    }

    #[test]
    fn inverse_distance_votes_k3() {
        // d = (0.4, 0.1, 0.6) -> w = (2.5, 10, 5/3); b outweighs a.
        let cfg = KnnConfig {
            k: 3,
            weighting: VoteWeighting::InverseDistance,
        };
        let c = KnnClassifier::new(line_dataset(), cfg).unwrap();
        let dist = c.classify(&query(0.4)).unwrap();
        let total = 2.5 + 10.0 + 1.0 / 0.6;
        assert_abs_diff_eq!(dist.probabilities()[1], 10.0 / total, epsilon = 1e-12);
        assert_eq!(dist.predicted(), 1);
    }

    #[test]
    fn complement_distance_votes_k3() {
        // w = (0.6, 0.9, 0.4) -> a: 1.0, b: 0.9.
        let cfg = KnnConfig {
            k: 3,
            weighting: VoteWeighting::ComplementDistance,
        };
        let c = KnnClassifier::new(line_dataset(), cfg).unwrap();
        let dist = c.classify(&query(0.4)).unwrap();
        assert_abs_diff_eq!(dist.probabilities()[0], 1.0 / 1.9, epsilon = 1e-12);
        assert_eq!(dist.predicted(), 0);
    }

    #[test]
    fn zero_distance_takes_whole_inverse_vote() {
        // Two exact matches (one per class) plus a very close b; the close
        // neighbour would dominate under plain 1/d weighting.
        let text = "@relation t\n@attribute x numeric\n@attribute c {a,b}\n@data\n\
                    0.4,b\n0.4,a\n0.39,b\n";
        let d = load_dataset(Cursor::new(text), SourceFormat::Arff, None).unwrap();
        let cfg = KnnConfig {
            k: 3,
            weighting: VoteWeighting::InverseDistance,
        };
        let c = KnnClassifier::new(d, cfg).unwrap();
        let dist = c.classify(&query(0.4)).unwrap();
        assert_eq!(dist.probabilities(), &[0.5, 0.5]);
        assert_eq!(dist.predicted(), 0);
    }

    #[test]
    fn complement_all_zero_falls_back_to_uniform() {
        let text = "@relation t\n@attribute x numeric\n@attribute y numeric\n\
                    @attribute c {a,b}\n@data\n0.0,0.0,a\n0.0,0.1,b\n0.1,0.0,b\n";
        let d = load_dataset(Cursor::new(text), SourceFormat::Arff, None).unwrap();
        let cfg = KnnConfig {
            k: 3,
            weighting: VoteWeighting::ComplementDistance,
        };
        let c = KnnClassifier::new(d, cfg).unwrap();
        let q = vec![Cell::Numeric(1.0), Cell::Numeric(1.0), Cell::Missing];
        let dist = c.classify(&q).unwrap();
        assert_abs_diff_eq!(dist.probabilities()[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dist.probabilities()[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn distance_ties_break_to_lower_index() {
        let text = "@relation t\n@attribute x numeric\n@attribute c {a,b}\n@data\n\
                    0.0,b\n1.0,a\n";
        let d = load_dataset(Cursor::new(text), SourceFormat::Arff, None).unwrap();
        let c = KnnClassifier::new(d, KnnConfig::default()).unwrap();
        assert_eq!(c.predict(&query(0.5)).unwrap(), 1); // class b sits at index 0
    }

    fn mixed_schema() -> Vec<AttributeSchema> {
        vec![
            AttributeSchema {
                name: "num".into(),
                index: 0,
                kind: AttributeKind::Numeric,
            },
            AttributeSchema {
                name: "nom".into(),
                index: 1,
                kind: AttributeKind::Nominal(vec!["p".into(), "q".into()]),
            },
            AttributeSchema {
                name: "c".into(),
                index: 2,
                kind: AttributeKind::Nominal(vec!["x".into(), "y".into()]),
            },
        ]
    }

    #[test]
    fn missing_value_distance_semantics() {
        let schema = mixed_schema();
        let d = |a: &[Cell], b: &[Cell]| distance(&schema, 2, a, b).unwrap();
        let m = Cell::Missing;

        // numeric with one side missing: max(v, 1-v)
        let a = [Cell::Numeric(0.3), Cell::Nominal(0), m];
        let b = [m, Cell::Nominal(0), m];
        assert_abs_diff_eq!(d(&a, &b), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(d(&b, &a), 0.7, epsilon = 1e-15);

        // both numeric missing and equal nominals: sqrt(1^2 + 0)
        let c1 = [m, Cell::Nominal(1), m];
        let c2 = [m, Cell::Nominal(1), m];
        assert_abs_diff_eq!(d(&c1, &c2), 1.0, epsilon = 1e-15);

        // nominal one side missing counts 1
        let e1 = [Cell::Numeric(0.5), m, m];
        let e2 = [Cell::Numeric(0.5), Cell::Nominal(0), m];
        assert_abs_diff_eq!(d(&e1, &e2), 1.0, epsilon = 1e-15);

        // differing nominals count 1
        let f1 = [Cell::Numeric(0.5), Cell::Nominal(0), m];
        let f2 = [Cell::Numeric(0.5), Cell::Nominal(1), m];
        assert_abs_diff_eq!(d(&f1, &f2), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn class_attribute_is_excluded_from_distance() {
        let schema = mixed_schema();
        let a = [Cell::Numeric(0.5), Cell::Nominal(0), Cell::Nominal(0)];
        let b = [Cell::Numeric(0.5), Cell::Nominal(0), Cell::Nominal(1)];
        assert_eq!(distance(&schema, 2, &a, &b).unwrap(), 0.0);
    }

    #[test]
    fn distance_validates_arity_and_kind() {
        let schema = mixed_schema();
        let short = [Cell::Numeric(0.5)];
        let full = [Cell::Numeric(0.5), Cell::Nominal(0), Cell::Missing];
        assert!(distance(&schema, 2, &short, &full).is_err());
        let wrong = [Cell::Nominal(0), Cell::Nominal(0), Cell::Missing];
        assert!(distance(&schema, 2, &wrong, &full).is_err());
    }

    #[test]
    fn k_bounds_are_enforced() {
        let d = line_dataset();
        let bad0 = KnnConfig {
            k: 0,
            weighting: VoteWeighting::Uniform,
        };
        assert!(KnnClassifier::new(d.clone(), bad0).is_err());
        let bad_even = KnnConfig {
            k: 2,
            weighting: VoteWeighting::Uniform,
        };
        assert!(KnnClassifier::new(d.clone(), bad_even).is_err());
        let bad_large = KnnConfig {
            k: 5,
            weighting: VoteWeighting::Uniform,
        };
        assert!(KnnClassifier::new(d, bad_large).is_err());
    }

    #[test]
    fn missing_training_class_rejected() {
        let text = "@relation t\n@attribute x numeric\n@attribute c {a,b}\n@data\n\
                    0.0,a\n0.5,?\n";
        let d = load_dataset(Cursor::new(text), SourceFormat::Arff, None).unwrap();
        assert!(matches!(
            KnnClassifier::new(d, KnnConfig::default()),
            Err(Error::MissingClass { row: 1 })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn grid_dataset(points: &[(u8, u8, bool)]) -> Dataset {
            let schema = vec![
                AttributeSchema {
                    name: "x".into(),
                    index: 0,
                    kind: AttributeKind::Numeric,
                },
                AttributeSchema {
                    name: "y".into(),
                    index: 1,
                    kind: AttributeKind::Numeric,
                },
                AttributeSchema {
                    name: "c".into(),
                    index: 2,
                    kind: AttributeKind::Nominal(vec!["a".into(), "b".into()]),
                },
            ];
            let instances = points
                .iter()
                .map(|&(x, y, cls)| {
                    vec![
                        Cell::Numeric(x as f64 / 10.0),
                        Cell::Numeric(y as f64 / 10.0),
                        Cell::Nominal(cls as usize),
                    ]
                })
                .collect();
            Dataset::new(schema, 2, instances).unwrap()
        }

        /// Straightforward reimplementation used as an oracle.
        fn oracle_votes(d: &Dataset, q: &[Cell], k: usize, weighting: VoteWeighting) -> Vec<f64> {
            let mut dist: Vec<(f64, usize)> = (0..d.n_instances())
                .map(|r| {
                    (
                        distance(d.schema(), d.class_index(), q, d.instance(r)).unwrap(),
                        r,
                    )
                })
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dist.truncate(k);
            let mut votes = vec![0.0; d.n_classes()];
            let zero = dist.iter().any(|&(dd, _)| dd == 0.0);
            let all_far = dist.iter().all(|&(dd, _)| dd >= 1.0);
            for &(dd, r) in &dist {
                let cls = d.class_of(r).unwrap();
                votes[cls] += match weighting {
                    VoteWeighting::Uniform => 1.0,
                    VoteWeighting::InverseDistance => {
                        if zero {
                            if dd == 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            1.0 / dd
                        }
                    }
                    VoteWeighting::ComplementDistance => {
                        if all_far {
                            1.0
                        } else {
                            (1.0 - dd).max(0.0)
                        }
                    }
                };
            }
            let total: f64 = votes.iter().sum();
            votes.iter().map(|v| v / total).collect()
        }

        proptest! {
            #[test]
            fn classify_matches_bruteforce(
                points in proptest::collection::vec((0u8..=10, 0u8..=10, any::<bool>()), 1..25),
                qx in 0u8..=10,
                qy in 0u8..=10,
                k_raw in 1usize..25,
                w_raw in 0u8..3,
            ) {
                let d = grid_dataset(&points);
                // Only odd neighbour counts are accepted by the classifier.
                let odd_choices = d.n_instances().div_ceil(2);
                let k = 2 * (k_raw % odd_choices) + 1;
                let weighting = match w_raw {
                    0 => VoteWeighting::Uniform,
                    1 => VoteWeighting::InverseDistance,
                    _ => VoteWeighting::ComplementDistance,
                };
                let c = KnnClassifier::new(d.clone(), KnnConfig { k, weighting }).unwrap();
                let q = vec![
                    Cell::Numeric(qx as f64 / 10.0),
                    Cell::Numeric(qy as f64 / 10.0),
                    Cell::Missing,
                ];
                let got = c.classify(&q).unwrap();
                let want = oracle_votes(&d, &q, k, weighting);
                let sum: f64 = got.probabilities().iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                for (g, w) in got.probabilities().iter().zip(&want) {
                    prop_assert!((g - w).abs() < 1e-12, "got {:?} want {:?}", got, want);
                }
            }

            #[test]
            fn distance_is_symmetric_and_zero_on_self(
                ax in 0u8..=10, ay in 0u8..=10, bx in 0u8..=10, by in 0u8..=10
            ) {
                let d = grid_dataset(&[(ax, ay, false), (bx, by, true)]);
                let s = d.schema();
                let fwd = distance(s, 2, d.instance(0), d.instance(1)).unwrap();
                let rev = distance(s, 2, d.instance(1), d.instance(0)).unwrap();
                prop_assert_eq!(fwd, rev);
                prop_assert_eq!(distance(s, 2, d.instance(0), d.instance(0)).unwrap(), 0.0);
            }
        }
    }
}

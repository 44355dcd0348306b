//! Feed-forward network with one sigmoid hidden layer, trained per instance
//! by the generalized delta rule with momentum.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Cell, Dataset};
use crate::error::{Error, Result};
use crate::knn::ClassDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Hidden units; 0 trains a single sigmoid layer on the inputs.
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 2,
            learning_rate: 0.3,
            momentum: 0.2,
            epochs: 500,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && self.learning_rate <= 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must lie in (0, 1]",
                self.learning_rate
            )));
        }
        if !(self.momentum.is_finite() && (0.0..1.0).contains(&self.momentum)) {
            return Err(Error::InvalidConfig(format!(
                "momentum {} must lie in [0, 1)",
                self.momentum
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig(
                "epoch count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    /// weights[out][in]
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    /// Previous updates, kept for the momentum term.
    dw: Vec<Vec<f64>>,
    db: Vec<f64>,
}

impl Layer {
    fn new(weights: Vec<Vec<f64>>, biases: Vec<f64>) -> Layer {
        let rows = biases.len();
        let cols = weights.first().map_or(0, |r| r.len());
        Layer {
            weights,
            biases,
            dw: vec![vec![0.0; cols]; rows],
            db: vec![0.0; rows],
        }
    }

    fn activate(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| {
                let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b;
                sigmoid(z)
            })
            .collect()
    }

    /// Gradient-descent update with momentum for one instance.
    fn update(&mut self, input: &[f64], deltas: &[f64], learning_rate: f64, momentum: f64) {
        for (k, &delta) in deltas.iter().enumerate() {
            for (j, &x) in input.iter().enumerate() {
                let step = -learning_rate * delta * x + momentum * self.dw[k][j];
                self.weights[k][j] += step;
                self.dw[k][j] = step;
            }
            let step = -learning_rate * delta + momentum * self.db[k];
            self.biases[k] += step;
            self.db[k] = step;
        }
    }
}

/// Sigmoid feed-forward network: inputs -> (optional hidden layer) -> outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n_inputs: usize,
    hidden: usize,
    n_outputs: usize,
    layers: Vec<Layer>,
}

impl Network {
    /// Fresh network with weights and biases drawn uniformly from
    /// [-0.5, 0.5), seeded by `config.seed`.
    pub fn init(n_inputs: usize, n_outputs: usize, config: &MlpConfig) -> Result<Network> {
        if n_inputs == 0 {
            return Err(Error::EmptyInput("network needs at least one input".into()));
        }
        if n_outputs < 2 {
            return Err(Error::InvalidConfig(
                "network needs at least two output classes".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(0);
        let mut draw_layer = |rows: usize, cols: usize| {
            let weights = (0..rows)
                .map(|_| (0..cols).map(|_| rng.random_range(-0.5..0.5)).collect())
                .collect();
            let biases = (0..rows).map(|_| rng.random_range(-0.5..0.5)).collect();
            Layer::new(weights, biases)
        };
        let layers = if config.hidden == 0 {
            vec![draw_layer(n_outputs, n_inputs)]
        } else {
            vec![
                draw_layer(config.hidden, n_inputs),
                draw_layer(n_outputs, config.hidden),
            ]
        };
        Ok(Network {
            n_inputs,
            hidden: config.hidden,
            n_outputs,
            layers,
        })
    }

    /// Build a network from explicit weights. `layers` holds
    /// `(weights[out][in], biases)` pairs: one pair for `hidden == 0`,
    /// otherwise hidden then output layer.
    pub fn from_parts(
        n_inputs: usize,
        hidden: usize,
        n_outputs: usize,
        layers: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
    ) -> Result<Network> {
        let expect: Vec<(usize, usize)> = if hidden == 0 {
            vec![(n_outputs, n_inputs)]
        } else {
            vec![(hidden, n_inputs), (n_outputs, hidden)]
        };
        if layers.len() != expect.len() {
            return Err(Error::InvalidConfig(format!(
                "{} weight layers supplied, {} expected",
                layers.len(),
                expect.len()
            )));
        }
        let mut built = Vec::new();
        for ((weights, biases), (rows, cols)) in layers.into_iter().zip(expect) {
            if weights.len() != rows || biases.len() != rows {
                return Err(Error::InvalidConfig(format!(
                    "layer needs {rows} rows, got {} weight rows and {} biases",
                    weights.len(),
                    biases.len()
                )));
            }
            if weights.iter().any(|r| r.len() != cols) {
                return Err(Error::InvalidConfig(format!(
                    "every weight row must have {cols} columns"
                )));
            }
            built.push(Layer::new(weights, biases));
        }
        Ok(Network {
            n_inputs,
            hidden,
            n_outputs,
            layers: built,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Weight/bias copies in the same shape `from_parts` accepts.
    pub fn parts(&self) -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
        self.layers
            .iter()
            .map(|l| (l.weights.clone(), l.biases.clone()))
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_inputs {
            return Err(Error::SchemaMismatch(format!(
                "input of length {} against {} network inputs",
                x.len(),
                self.n_inputs
            )));
        }
        Ok(())
    }

    /// Raw output activations.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut act = x.to_vec();
        for layer in &self.layers {
            act = layer.activate(&act);
        }
        Ok(act)
    }

    /// Output activations rescaled to sum to 1.
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let out = self.forward(x)?;
        let total: f64 = out.iter().sum();
        Ok(out.into_iter().map(|o| o / total).collect())
    }

    /// Output activations packaged as class vote weights; sigmoid outputs are
    /// strictly positive, so the distribution is always well formed.
    pub fn distribution(&self, x: &[f64]) -> Result<ClassDistribution> {
        Ok(ClassDistribution::from_votes(self.forward(x)?))
    }

    /// Class with the strongest output; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let out = self.forward(x)?;
        let mut best = 0;
        for (c, &o) in out.iter().enumerate() {
            if o > out[best] {
                best = c;
            }
        }
        Ok(best)
    }

    /// Instance error `E = 1/2 sum_k (o_k - t_k)^2`.
    pub fn sum_squared_error(&self, x: &[f64], target: &[f64]) -> Result<f64> {
        let out = self.forward(x)?;
        if target.len() != out.len() {
            return Err(Error::SchemaMismatch(format!(
                "target of length {} against {} outputs",
                target.len(),
                out.len()
            )));
        }
        Ok(out
            .iter()
            .zip(target)
            .map(|(o, t)| 0.5 * (o - t) * (o - t))
            .sum())
    }

    /// One stochastic update: forward pass, backpropagated deltas, then
    /// weight changes `step = -lr * grad + momentum * previous_step`.
    /// Returns the instance error measured before the update.
    pub fn backprop_step(
        &mut self,
        x: &[f64],
        target: &[f64],
        learning_rate: f64,
        momentum: f64,
    ) -> Result<f64> {
        self.check_input(x)?;
        if target.len() != self.n_outputs {
            return Err(Error::SchemaMismatch(format!(
                "target of length {} against {} outputs",
                target.len(),
                self.n_outputs
            )));
        }

        // Forward pass, keeping every activation.
        let mut activations: Vec<Vec<f64>> = vec![x.to_vec()];
        for layer in &self.layers {
            let next = layer.activate(activations.last().unwrap());
            activations.push(next);
        }
        let output = activations.last().unwrap();
        let error: f64 = output
            .iter()
            .zip(target)
            .map(|(o, t)| 0.5 * (o - t) * (o - t))
            .sum();

        // Output deltas: (o - t) * o * (1 - o).
        let delta_out: Vec<f64> = output
            .iter()
            .zip(target)
            .map(|(o, t)| (o - t) * o * (1.0 - o))
            .collect();

        if self.layers.len() == 1 {
            self.layers[0].update(&activations[0], &delta_out, learning_rate, momentum);
            return Ok(error);
        }

        // Hidden deltas use the output weights before they are updated.
        let hidden_act = &activations[1];
        let delta_hidden: Vec<f64> = (0..hidden_act.len())
            .map(|j| {
                let back: f64 = delta_out
                    .iter()
                    .zip(&self.layers[1].weights)
                    .map(|(d, row)| d * row[j])
                    .sum();
                back * hidden_act[j] * (1.0 - hidden_act[j])
            })
            .collect();

        let hidden_input = activations[1].clone();
        self.layers[1].update(&hidden_input, &delta_out, learning_rate, momentum);
        self.layers[0].update(&activations[0], &delta_hidden, learning_rate, momentum);
        Ok(error)
    }

    /// Flat text serialization, version tag `netfmt 1`. Momentum buffers are
    /// transient training state and are not stored.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("netfmt 1\n");
        let _ = writeln!(
            out,
            "inputs {} hidden {} outputs {}",
            self.n_inputs, self.hidden, self.n_outputs
        );
        for layer in &self.layers {
            let _ = writeln!(
                out,
                "weights {} {}",
                layer.weights.len(),
                layer.weights.first().map_or(0, |r| r.len())
            );
            for row in &layer.weights {
                let cells: Vec<String> = row.iter().map(|w| format!("{w}")).collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
            let _ = writeln!(out, "biases {}", layer.biases.len());
            let cells: Vec<String> = layer.biases.iter().map(|b| format!("{b}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io("writing network", e))
    }

    pub fn load<R: BufRead>(r: R) -> Result<Network> {
        fn parse(line: usize, msg: String) -> Error {
            Error::Parse { line, message: msg }
        }
        let lines: Vec<(usize, String)> = r
            .lines()
            .enumerate()
            .map(|(i, l)| l.map(|l| (i + 1, l)))
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io("reading network", e))?;
        let mut it = lines.into_iter().filter(|(_, l)| !l.trim().is_empty());

        let (n1, magic) = it
            .next()
            .ok_or_else(|| parse(0, "empty network file".into()))?;
        if magic.trim() != "netfmt 1" {
            return Err(parse(n1, format!("unsupported format '{}'", magic.trim())));
        }

        let (n2, header) = it
            .next()
            .ok_or_else(|| parse(n1, "missing header line".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let dims: Result<Vec<usize>> = match toks.as_slice() {
            ["inputs", i, "hidden", h, "outputs", o] => [i, h, o]
                .iter()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| parse(n2, format!("bad count '{t}'")))
                })
                .collect(),
            _ => Err(parse(n2, "expected 'inputs N hidden N outputs N'".into())),
        };
        let dims = dims?;
        let (n_inputs, hidden, n_outputs) = (dims[0], dims[1], dims[2]);

        let shapes: Vec<(usize, usize)> = if hidden == 0 {
            vec![(n_outputs, n_inputs)]
        } else {
            vec![(hidden, n_inputs), (n_outputs, hidden)]
        };

        fn parse_floats(
            it: &mut impl Iterator<Item = (usize, String)>,
            want: usize,
            what: &str,
        ) -> Result<Vec<f64>> {
            let (ln, line) = it
                .next()
                .ok_or_else(|| parse(0, format!("unexpected end of file in {what}")))?;
            let vals: Result<Vec<f64>> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse(ln, format!("bad weight '{t}'")))
                })
                .collect();
            let vals = vals?;
            if vals.len() != want {
                return Err(parse(
                    ln,
                    format!("{what} has {} values, expected {want}", vals.len()),
                ));
            }
            Ok(vals)
        }

        let mut layers = Vec::new();
        for (rows, cols) in shapes {
            let (ln, tag) = match it.next() {
                Some(x) => x,
                None => return Err(parse(0, "unexpected end of file".into())),
            };
            let toks: Vec<&str> = tag.split_whitespace().collect();
            match toks.as_slice() {
                ["weights", r, c] if r.parse() == Ok(rows) && c.parse() == Ok(cols) => {}
                _ => {
                    return Err(parse(
                        ln,
                        format!("expected 'weights {rows} {cols}', found '{}'", tag.trim()),
                    ))
                }
            }
            let mut weights = Vec::with_capacity(rows);
            for _ in 0..rows {
                weights.push(parse_floats(&mut it, cols, "weight row")?);
            }
            let (ln, tag) = match it.next() {
                Some(x) => x,
                None => return Err(parse(0, "unexpected end of file".into())),
            };
            let toks: Vec<&str> = tag.split_whitespace().collect();
            match toks.as_slice() {
                ["biases", r] if r.parse() == Ok(rows) => {}
                _ => {
                    return Err(parse(
                        ln,
                        format!("expected 'biases {rows}', found '{}'", tag.trim()),
                    ))
                }
            }
            let biases = parse_floats(&mut it, rows, "bias row")?;
            layers.push((weights, biases));
        }
        if let Some((ln, line)) = it.next() {
            return Err(parse(ln, format!("trailing content '{}'", line.trim())));
        }
        Network::from_parts(n_inputs, hidden, n_outputs, layers)
    }
}

/// Numeric feature vector of one instance: every non-class attribute, in
/// schema order. Errors on nominal or missing cells.
pub fn instance_features(d: &Dataset, row: usize) -> Result<Vec<f64>> {
    d.schema()
        .iter()
        .filter(|a| a.index != d.class_index())
        .map(|a| match d.cell(row, a.index) {
            Cell::Numeric(v) => Ok(v),
            Cell::Missing => Err(Error::MissingCells {
                attribute: a.name.clone(),
            }),
            Cell::Nominal(_) => Err(Error::SchemaMismatch(format!(
                "attribute '{}' is nominal; encode it numerically first",
                a.name
            ))),
        })
        .collect()
}

pub(crate) fn one_hot(class: usize, n_classes: usize) -> Vec<f64> {
    let mut t = vec![0.0; n_classes];
    t[class] = 1.0;
    t
}

/// Train a network on a fully numeric, complete dataset: one stochastic
/// update per instance, visiting instances in a freshly shuffled order each
/// epoch.
pub fn train(d: &Dataset, config: &MlpConfig) -> Result<Network> {
    config.validate()?;
    if d.n_instances() == 0 {
        return Err(Error::EmptyInput("mlp training set is empty".into()));
    }
    let mut xs = Vec::with_capacity(d.n_instances());
    let mut ys = Vec::with_capacity(d.n_instances());
    for row in 0..d.n_instances() {
        xs.push(instance_features(d, row)?);
        ys.push(d.class_of(row).ok_or(Error::MissingClass { row })?);
    }
    let n_inputs = xs[0].len();
    let n_outputs = d.n_classes();
    let mut net = Network::init(n_inputs, n_outputs, config)?;

    // Epoch shuffling draws from a separate stream of the same seed so the
    // initial weights and the visit order are independent.
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let targets: Vec<Vec<f64>> = ys.iter().map(|&c| one_hot(c, n_outputs)).collect();

    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for &i in &order {
            net.backprop_step(&xs[i], &targets[i], config.learning_rate, config.momentum)?;
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_dataset, SourceFormat};
    use approx::assert_abs_diff_eq;
    use std::io::Cursor;

    fn sig(z: f64) -> f64 {
        1.0 / (1.0 + (-z).exp())
    }

    #[test]
    fn forward_matches_matrix_oracle() {
        use nalgebra::{DMatrix, DVector};
        let w1 = vec![vec![0.1, -0.2], vec![0.3, 0.4], vec![-0.5, 0.6]];
        let b1 = vec![0.01, -0.02, 0.03];
        let w2 = vec![vec![0.7, -0.8, 0.9], vec![-1.0, 1.1, -1.2]];
        let b2 = vec![0.1, -0.1];
        let net = Network::from_parts(
            2,
            3,
            2,
            vec![(w1.clone(), b1.clone()), (w2.clone(), b2.clone())],
        )
        .unwrap();

        let x = [0.25, -0.75];
        let got = net.forward(&x).unwrap();

        let m1 = DMatrix::from_row_slice(3, 2, &w1.concat());
        let m2 = DMatrix::from_row_slice(2, 3, &w2.concat());
        let h = (m1 * DVector::from_row_slice(&x) + DVector::from_row_slice(&b1)).map(sig);
        let o = (m2 * h + DVector::from_row_slice(&b2)).map(sig);
        for (g, w) in got.iter().zip(o.iter()) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn forward_single_layer_hand_computed() {
        let w = vec![vec![0.2, -0.4], vec![0.1, 0.3]];
        let b = vec![0.05, -0.05];
        let net = Network::from_parts(2, 0, 2, vec![(w, b)]).unwrap();
        let got = net.forward(&[1.0, 0.5]).unwrap();
        assert_abs_diff_eq!(got[0], sig(0.2 - 0.2 + 0.05), epsilon = 1e-15);
        assert_abs_diff_eq!(got[1], sig(0.1 + 0.15 - 0.05), epsilon = 1e-15);
    }

    /// Analytic gradients (recovered from a lr=1, momentum=0 step) must match
    /// central finite differences of the instance error.
    #[test]
    fn backprop_matches_finite_differences() {
        let cfg = MlpConfig {
            hidden: 3,
            seed: 11,
            ..MlpConfig::default()
        };
        let base = Network::init(2, 2, &cfg).unwrap();
        let x = [0.3, 0.7];
        let t = [1.0, 0.0];

        let mut stepped = base.clone();
        stepped.backprop_step(&x, &t, 1.0, 0.0).unwrap();

        let h = 1e-5;
        for layer in 0..base.layers.len() {
            let rows = base.layers[layer].weights.len();
            let cols = base.layers[layer].weights[0].len();
            for r in 0..rows {
                for c in 0..cols {
                    let analytic =
                        base.layers[layer].weights[r][c] - stepped.layers[layer].weights[r][c];
                    let mut plus = base.clone();
                    plus.layers[layer].weights[r][c] += h;
                    let mut minus = base.clone();
                    minus.layers[layer].weights[r][c] -= h;
                    let numeric = (plus.sum_squared_error(&x, &t).unwrap()
                        - minus.sum_squared_error(&x, &t).unwrap())
                        / (2.0 * h);
                    assert!(
                        (analytic - numeric).abs() <= 1e-7 + 1e-4 * numeric.abs(),
                        "weight grad mismatch at layer {layer} [{r}][{c}]: {analytic} vs {numeric}"
                    );
                }
                let analytic = base.layers[layer].biases[r] - stepped.layers[layer].biases[r];
                let mut plus = base.clone();
                plus.layers[layer].biases[r] += h;
                let mut minus = base.clone();
                minus.layers[layer].biases[r] -= h;
                let numeric = (plus.sum_squared_error(&x, &t).unwrap()
                    - minus.sum_squared_error(&x, &t).unwrap())
                    / (2.0 * h);
                assert!(
                    (analytic - numeric).abs() <= 1e-7 + 1e-4 * numeric.abs(),
                    "bias grad mismatch at layer {layer} [{r}]: {analytic} vs {numeric}"
                );
            }
        }
    }

    /// Two updates on a 1-1-1 network, unrolled with scalar arithmetic.
    #[test]
    fn momentum_two_steps_hand_unrolled() {
        let lr = 0.1;
        let beta = 0.9;
        let x = 1.0;
        let t = 0.8;
        let (mut w1, mut b1, mut w2, mut b2) = (0.5, 0.1, -0.3, 0.2);

        let mut net = Network::from_parts(
            1,
            1,
            1,
            vec![(vec![vec![w1]], vec![b1]), (vec![vec![w2]], vec![b2])],
        )
        .unwrap();
        net.backprop_step(&[x], &[t], lr, beta).unwrap();
        net.backprop_step(&[x], &[t], lr, beta).unwrap();

        let (mut pw1, mut pb1, mut pw2, mut pb2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..2 {
            let h = sig(w1 * x + b1);
            let o = sig(w2 * h + b2);
            let d_out = (o - t) * o * (1.0 - o);
            let d_hid = d_out * w2 * h * (1.0 - h);
            pw2 = -lr * d_out * h + beta * pw2;
            pb2 = -lr * d_out + beta * pb2;
            pw1 = -lr * d_hid * x + beta * pw1;
            pb1 = -lr * d_hid + beta * pb1;
            w2 += pw2;
            b2 += pb2;
            w1 += pw1;
            b1 += pb1;
        }

        assert_abs_diff_eq!(net.layers[0].weights[0][0], w1, epsilon = 1e-15);
        assert_abs_diff_eq!(net.layers[0].biases[0], b1, epsilon = 1e-15);
        assert_abs_diff_eq!(net.layers[1].weights[0][0], w2, epsilon = 1e-15);
        assert_abs_diff_eq!(net.layers[1].biases[0], b2, epsilon = 1e-15);
    }

    fn separable_dataset() -> Dataset {
        let mut text = String::from("@relation t\n@attribute x numeric\n@attribute y numeric\n@attribute c {lo,hi}\n@data\n");
        for i in 0..10 {
            text.push_str(&format!("0.{i},0.0{i},lo\n"));
        }
        for i in 0..10 {
            text.push_str(&format!("0.{i},0.9{i},hi\n"));
        }
        load_dataset(Cursor::new(text), SourceFormat::Arff, None).unwrap()
    }

    #[test]
    fn single_layer_learns_linearly_separable_data() {
        let d = separable_dataset();
        let cfg = MlpConfig {
            hidden: 0,
            learning_rate: 0.5,
            momentum: 0.2,
            epochs: 300,
            seed: 7,
        };
        let net = train(&d, &cfg).unwrap();
        for row in 0..d.n_instances() {
            let x = instance_features(&d, row).unwrap();
            assert_eq!(net.predict(&x).unwrap(), d.class_of(row).unwrap());
        }
    }

    fn xor_dataset() -> Dataset {
        let text = "@relation t\n@attribute x numeric\n@attribute y numeric\n\
                    @attribute c {a,b}\n@data\n0,0,a\n0,1,b\n1,0,b\n1,1,a\n";
        load_dataset(Cursor::new(text), SourceFormat::Arff, None).unwrap()
    }

    #[test]
    fn hidden_layer_solves_xor_where_single_layer_cannot() {
        let d = xor_dataset();
        let cfg = MlpConfig {
            hidden: 2,
            learning_rate: 0.3,
            momentum: 0.2,
            epochs: 5000,
            seed: 3,
        };
        let net = train(&d, &cfg).unwrap();
        let mut correct = 0;
        for row in 0..4 {
            let x = instance_features(&d, row).unwrap();
            if net.predict(&x).unwrap() == d.class_of(row).unwrap() {
                correct += 1;
            }
        }
        assert_eq!(correct, 4, "hidden layer failed to fit xor");

        let flat = train(&d, &MlpConfig { hidden: 0, ..cfg }).unwrap();
        let mut correct = 0;
        for row in 0..4 {
            let x = instance_features(&d, row).unwrap();
            if flat.predict(&x).unwrap() == d.class_of(row).unwrap() {
                correct += 1;
            }
        }
        assert!(correct < 4, "a single layer should not separate xor");
    }

    #[test]
    fn probabilities_rescale_outputs() {
        let cfg = MlpConfig {
            hidden: 3,
            seed: 5,
            ..MlpConfig::default()
        };
        let net = Network::init(4, 3, &cfg).unwrap();
        let x = [0.1, 0.9, 0.4, 0.2];
        let out = net.forward(&x).unwrap();
        let probs = net.probabilities(&x).unwrap();
        let sum: f64 = probs.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        let total: f64 = out.iter().sum();
        for (p, o) in probs.iter().zip(&out) {
            assert_abs_diff_eq!(p, &(o / total), epsilon = 1e-15);
        }
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let d = separable_dataset();
        let cfg = MlpConfig {
            hidden: 2,
            epochs: 20,
            seed: 42,
            ..MlpConfig::default()
        };
        let a = train(&d, &cfg).unwrap();
        let b = train(&d, &cfg).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let c = train(&d, &MlpConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.to_text(), c.to_text());
    }

    #[test]
    fn mean_loss_decreases_under_small_learning_rate() {
        let d = separable_dataset();
        let mut xs = Vec::new();
        let mut ts = Vec::new();
        for row in 0..d.n_instances() {
            xs.push(instance_features(&d, row).unwrap());
            ts.push(one_hot(d.class_of(row).unwrap(), 2));
        }
        let cfg = MlpConfig {
            hidden: 0,
            seed: 1,
            ..MlpConfig::default()
        };
        let mut net = Network::init(2, 2, &cfg).unwrap();
        let mean_loss = |net: &Network| -> f64 {
            xs.iter()
                .zip(&ts)
                .map(|(x, t)| net.sum_squared_error(x, t).unwrap())
                .sum::<f64>()
                / xs.len() as f64
        };
        let initial = mean_loss(&net);
        let mut previous = initial;
        for _ in 0..50 {
            for (x, t) in xs.iter().zip(&ts) {
                net.backprop_step(x, t, 0.01, 0.0).unwrap();
            }
            let now = mean_loss(&net);
            assert!(now <= previous + 1e-9, "loss rose from {previous} to {now}");
            previous = now;
        }
        assert!(previous < initial);
    }

    #[test]
    fn serialization_round_trips() {
        let d = separable_dataset();
        let cfg = MlpConfig {
            hidden: 3,
            epochs: 5,
            seed: 9,
            ..MlpConfig::default()
        };
        let net = train(&d, &cfg).unwrap();
        let text = net.to_text();
        assert!(text.starts_with("netfmt 1\n"));
        let back = Network::load(Cursor::new(text.as_bytes())).unwrap();
        assert_eq!(back.to_text(), text);
        let x = instance_features(&d, 3).unwrap();
        assert_eq!(net.forward(&x).unwrap(), back.forward(&x).unwrap());
    }

    #[test]
    fn load_rejects_malformed_files() {
        let bad_magic = "netfmt 2\ninputs 1 hidden 0 outputs 1\n";
        assert!(matches!(
            Network::load(Cursor::new(bad_magic.as_bytes())),
            Err(Error::Parse { line: 1, .. })
        ));

        let short_row = "netfmt 1\ninputs 2 hidden 0 outputs 1\nweights 1 2\n0.5\nbiases 1\n0.1\n";
        assert!(matches!(
            Network::load(Cursor::new(short_row.as_bytes())),
            Err(Error::Parse { line: 4, .. })
        ));

        let wrong_shape = "netfmt 1\ninputs 2 hidden 0 outputs 1\nweights 2 2\n";
        assert!(Network::load(Cursor::new(wrong_shape.as_bytes())).is_err());
    }

    #[test]
    fn init_seed_reproducible_and_in_range() {
        let cfg = MlpConfig {
            hidden: 4,
            seed: 123,
            ..MlpConfig::default()
        };
        let a = Network::init(3, 2, &cfg).unwrap();
        let b = Network::init(3, 2, &cfg).unwrap();
        assert_eq!(a, b);
        for layer in &a.layers {
            for row in &layer.weights {
                assert!(row.iter().all(|w| (-0.5..0.5).contains(w)));
            }
            assert!(layer.biases.iter().all(|b| (-0.5..0.5).contains(b)));
        }
    }

    #[test]
    fn train_rejects_incomplete_or_nominal_data() {
        let text = "@relation t\n@attribute x numeric\n@attribute c {a,b}\n@data\n?,a\n1,b\n";
        let d = load_dataset(Cursor::new(text), SourceFormat::Arff, None).unwrap();
        assert!(matches!(
            train(&d, &MlpConfig::default()),
            Err(Error::MissingCells { .. })
        ));

        let text = "@relation t\n@attribute f {p,q}\n@attribute c {a,b}\n@data\np,a\nq,b\n";
        let d = load_dataset(Cursor::new(text), SourceFormat::Arff, None).unwrap();
        assert!(matches!(
            train(&d, &MlpConfig::default()),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn config_validation() {
        let bad_lr = MlpConfig {
            learning_rate: 0.0,
            ..MlpConfig::default()
        };
        assert!(bad_lr.validate().is_err());
        let big_lr = MlpConfig {
            learning_rate: 1.5,
            ..MlpConfig::default()
        };
        assert!(big_lr.validate().is_err());
        let bad_mom = MlpConfig {
            momentum: 1.0,
            ..MlpConfig::default()
        };
        assert!(bad_mom.validate().is_err());
        let no_epochs = MlpConfig {
            epochs: 0,
            ..MlpConfig::default()
        };
        assert!(no_epochs.validate().is_err());
        assert!(MlpConfig::default().validate().is_ok());
        let full_lr = MlpConfig {
            learning_rate: 1.0,
            ..MlpConfig::default()
        };
        assert!(full_lr.validate().is_ok());
    }

    #[test]
    fn zero_network_outputs_one_half_everywhere() {
        let zeros2 = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let net = Network::from_parts(
            2,
            2,
            2,
            vec![(zeros2.clone(), vec![0.0, 0.0]), (zeros2, vec![0.0, 0.0])],
        )
        .unwrap();
        let out = net.forward(&[0.3, -0.7]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
        let dist = net.distribution(&[0.3, -0.7]).unwrap();
        assert_eq!(dist.probabilities(), vec![0.5, 0.5]);
        assert_eq!(dist.predicted(), 0);
    }

    #[test]
    fn exact_target_produces_zero_update() {
        let cfg = MlpConfig {
            hidden: 3,
            seed: 11,
            ..MlpConfig::default()
        };
        let net = Network::init(4, 2, &cfg).unwrap();
        let x = [0.2, 0.8, 0.1, 0.5];
        let target = net.forward(&x).unwrap();
        let mut trained = net.clone();
        trained.backprop_step(&x, &target, 0.9, 0.0).unwrap();
        assert_eq!(trained.to_text(), net.to_text());
    }
}

//! Forward evaluation of small feed-forward networks loaded from text files.
//!
//! File grammar (blank lines and `#` comments ignored):
//!
//! ```text
//! layers <n_in> <n_hidden>... <n_out>
//! activation <hidden: logistic|tanh|linear> <output: logistic|tanh|linear>
//! weights <rows> <cols>        # one block per layer, rows = units of that layer
//! <cols numbers>               # repeated <rows> times, row-major
//! bias <rows>
//! <rows numbers>
//! ...                          # further weights/bias pairs; after the last layer
//!                              # a new weights block starts another ensemble member
//! input_offset <n_in numbers>
//! input_scale <n_in numbers>
//! output_offset <n_out numbers>
//! output_scale <n_out numbers>
//! output_transform <n_out of identity|exp|pow10>   # optional
//! ```
//!
//! Inputs are normalized as `(x - offset) / scale`; raw outputs are mapped back
//! with `y * scale + offset`, averaged across members, then transformed.

use super::PtfError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Logistic,
    Tanh,
    Linear,
}

impl Activation {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "logistic" | "sigmoid" => Some(Activation::Logistic),
            "tanh" => Some(Activation::Tanh),
            "linear" | "identity" => Some(Activation::Linear),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Logistic => "logistic",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Logistic => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputTransform {
    Identity,
    Exp,
    Pow10,
}

impl OutputTransform {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(OutputTransform::Identity),
            "exp" => Some(OutputTransform::Exp),
            "pow10" => Some(OutputTransform::Pow10),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            OutputTransform::Identity => "identity",
            OutputTransform::Exp => "exp",
            OutputTransform::Pow10 => "pow10",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            OutputTransform::Identity => x,
            OutputTransform::Exp => x.exp(),
            OutputTransform::Pow10 => 10f64.powf(x),
        }
    }
}

/// One dense layer; `weights` is row-major with `bias.len()` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn inputs(&self) -> usize {
        if self.bias.is_empty() {
            0
        } else {
            self.weights.len() / self.bias.len()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    /// Ensemble members, each a stack of `layer_sizes.len() - 1` layers.
    pub members: Vec<Vec<DenseLayer>>,
    pub input_offset: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub output_offset: Vec<f64>,
    pub output_scale: Vec<f64>,
    pub output_transform: Vec<OutputTransform>,
}

impl AnnSpec {
    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn validate(&self) -> Result<(), PtfError> {
        let err = |m: String| Err(PtfError::Ann(m));
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return err(format!("invalid layer sizes {:?}", self.layer_sizes));
        }
        if self.members.is_empty() {
            return err("no weight blocks".into());
        }
        for (m, layers) in self.members.iter().enumerate() {
            if layers.len() != self.layer_sizes.len() - 1 {
                return err(format!("member {m}: {} layers, expected {}", layers.len(), self.layer_sizes.len() - 1));
            }
            for (k, layer) in layers.iter().enumerate() {
                let (n_in, n_out) = (self.layer_sizes[k], self.layer_sizes[k + 1]);
                if layer.bias.len() != n_out || layer.weights.len() != n_in * n_out {
                    return err(format!(
                        "member {m} layer {}: weights {}x{} expected {n_out}x{n_in}",
                        k + 1,
                        layer.bias.len(),
                        layer.inputs()
                    ));
                }
            }
        }
        let (n_in, n_out) = (self.n_inputs(), self.n_outputs());
        if self.input_offset.len() != n_in || self.input_scale.len() != n_in {
            return err(format!("input normalization must have {n_in} entries"));
        }
        if self.output_offset.len() != n_out || self.output_scale.len() != n_out {
            return err(format!("output normalization must have {n_out} entries"));
        }
        if self.output_transform.len() != n_out {
            return err(format!("output_transform must have {n_out} entries"));
        }
        if self.input_scale.iter().any(|s| *s == 0.0 || !s.is_finite()) {
            return err("input_scale entries must be finite and nonzero".into());
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, PtfError> {
        Parser::new(text).parse()
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        let sizes: Vec<String> = self.layer_sizes.iter().map(|s| s.to_string()).collect();
        out += &format!("layers {}\n", sizes.join(" "));
        out += &format!("activation {} {}\n", self.hidden_activation.name(), self.output_activation.name());
        for layers in &self.members {
            for layer in layers {
                let cols = layer.inputs();
                out += &format!("weights {} {}\n", layer.bias.len(), cols);
                for row in layer.weights.chunks(cols.max(1)) {
                    out += &join(row);
                    out.push('\n');
                }
                out += &format!("bias {}\n{}\n", layer.bias.len(), join(&layer.bias));
            }
        }
        out += &format!("input_offset {}\n", join(&self.input_offset));
        out += &format!("input_scale {}\n", join(&self.input_scale));
        out += &format!("output_offset {}\n", join(&self.output_offset));
        out += &format!("output_scale {}\n", join(&self.output_scale));
        let t: Vec<&str> = self.output_transform.iter().map(|t| t.name()).collect();
        out += &format!("output_transform {}\n", t.join(" "));
        out
    }
}

/// Runs the network: normalize, hidden layers, linear output, denormalize,
/// average members, then apply the per-output transform.
pub fn ann_forward(spec: &AnnSpec, inputs: &[f64]) -> Result<Vec<f64>, PtfError> {
    spec.validate()?;
    if inputs.len() != spec.n_inputs() {
        return Err(PtfError::Ann(format!("expected {} inputs, got {}", spec.n_inputs(), inputs.len())));
    }
    let normalized: Vec<f64> =
        inputs.iter().zip(spec.input_offset.iter().zip(&spec.input_scale)).map(|(x, (o, s))| (x - o) / s).collect();
    let n_out = spec.n_outputs();
    let mut acc = vec![0.0; n_out];
    for layers in &spec.members {
        let mut x = normalized.clone();
        for (k, layer) in layers.iter().enumerate() {
            let act = if k + 1 == layers.len() { spec.output_activation } else { spec.hidden_activation };
            let cols = x.len();
            x = layer
                .bias
                .iter()
                .enumerate()
                .map(|(r, b)| {
                    let row = &layer.weights[r * cols..(r + 1) * cols];
                    act.apply(row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + b)
                })
                .collect();
        }
        for (a, (y, (o, s))) in acc.iter_mut().zip(x.iter().zip(spec.output_offset.iter().zip(&spec.output_scale))) {
            *a += y * s + o;
        }
    }
    let m = spec.members.len() as f64;
    Ok(acc.into_iter().zip(&spec.output_transform).map(|(a, t)| t.apply(a / m)).collect())
}

struct Parser<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("").trim();
                (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
            })
            .collect();
        Self { lines, pos: 0 }
    }

    fn err<T>(&self, line: usize, msg: impl Into<String>) -> Result<T, PtfError> {
        Err(PtfError::Ann(format!("line {line}: {}", msg.into())))
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let l = self.lines.get(self.pos).cloned();
        self.pos += 1;
        l
    }

    fn peek_keyword(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|(_, t)| t[0])
    }

    fn numbers(&self, line: usize, toks: &[&str]) -> Result<Vec<f64>, PtfError> {
        toks.iter().map(|t| t.parse::<f64>().or_else(|_| self.err(line, format!("bad number '{t}'")))).collect()
    }

    fn keyword_line(&mut self, kw: &str) -> Result<(usize, Vec<&'a str>), PtfError> {
        match self.next() {
            Some((l, t)) if t[0] == kw => Ok((l, t[1..].to_vec())),
            Some((l, t)) => self.err(l, format!("expected '{kw}', found '{}'", t[0])),
            None => self.err(0, format!("unexpected end of file, expected '{kw}'")),
        }
    }

    fn vector(&mut self, kw: &str) -> Result<Vec<f64>, PtfError> {
        let (l, toks) = self.keyword_line(kw)?;
        self.numbers(l, &toks)
    }

    fn parse(mut self) -> Result<AnnSpec, PtfError> {
        let (l, toks) = self.keyword_line("layers")?;
        let layer_sizes = toks
            .iter()
            .map(|t| t.parse::<usize>().or_else(|_| self.err(l, format!("bad layer size '{t}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        if layer_sizes.len() < 2 {
            return self.err(l, "need at least input and output sizes");
        }
        let (l, toks) = self.keyword_line("activation")?;
        if toks.len() != 2 {
            return self.err(l, "activation needs hidden and output entries");
        }
        let hidden_activation =
            Activation::parse(toks[0]).map_or_else(|| self.err(l, format!("unknown activation '{}'", toks[0])), Ok)?;
        let output_activation =
            Activation::parse(toks[1]).map_or_else(|| self.err(l, format!("unknown activation '{}'", toks[1])), Ok)?;

        let n_layers = layer_sizes.len() - 1;
        let mut members = Vec::new();
        while self.peek_keyword() == Some("weights") {
            let mut layers = Vec::with_capacity(n_layers);
            for _ in 0..n_layers {
                let (l, toks) = self.keyword_line("weights")?;
                let dims = self.numbers(l, &toks)?;
                if dims.len() != 2 {
                    return self.err(l, "weights needs <rows> <cols>");
                }
                let (rows, cols) = (dims[0] as usize, dims[1] as usize);
                let mut weights = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let Some((l, toks)) = self.next() else {
                        return self.err(l, "truncated weight block");
                    };
                    let row = self.numbers(l, &toks)?;
                    if row.len() != cols {
                        return self.err(l, format!("expected {cols} weights, found {}", row.len()));
                    }
                    weights.extend(row);
                }
                let (l, toks) = self.keyword_line("bias")?;
                let n = self.numbers(l, &toks)?;
                if n.len() != 1 || n[0] as usize != rows {
                    return self.err(l, format!("bias count must equal {rows}"));
                }
                let Some((l, toks)) = self.next() else {
                    return self.err(l, "missing bias values");
                };
                let bias = self.numbers(l, &toks)?;
                if bias.len() != rows {
                    return self.err(l, format!("expected {rows} bias values, found {}", bias.len()));
                }
                layers.push(DenseLayer { weights, bias });
            }
            members.push(layers);
        }
        let input_offset = self.vector("input_offset")?;
        let input_scale = self.vector("input_scale")?;
        let output_offset = self.vector("output_offset")?;
        let output_scale = self.vector("output_scale")?;
        let n_out = *layer_sizes.last().unwrap();
        let output_transform = match self.next() {
            None => vec![OutputTransform::Identity; n_out],
            Some((l, toks)) if toks[0] == "output_transform" => toks[1..]
                .iter()
                .map(|t| OutputTransform::parse(t).map_or_else(|| self.err(l, format!("unknown transform '{t}'")), Ok))
                .collect::<Result<Vec<_>, _>>()?,
            Some((l, toks)) => return self.err(l, format!("unexpected '{}'", toks[0])),
        };
        if let Some((l, toks)) = self.next() {
            return self.err(l, format!("trailing content '{}'", toks[0]));
        }
        let spec = AnnSpec {
            layer_sizes,
            hidden_activation,
            output_activation,
            members,
            input_offset,
            input_scale,
            output_offset,
            output_scale,
            output_transform,
        };
        spec.validate()?;
        Ok(spec)
    }
}

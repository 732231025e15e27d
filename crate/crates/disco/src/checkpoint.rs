//! Text checkpoints.
//!
//! ```text
//! disco-checkpoint 1
//! variant disco
//! iteration 200
//! rng <4 x 16 hex digits>
//! config <n>            followed by n lines of rendered config
//! network g_ab          one block per present network, in ModelSet order
//! layers 2 64 64 2
//! activations relu relu relu
//! w 0 2 64              then 2 lines of 64 values
//! b 0 64                then 1 line of 64 values
//! ...
//! adam g_ab             one block per network, same order
//! t 200
//! hyper <lr> <beta1> <beta2> <epsilon> <weight_decay>
//! m                     tensor blocks as above
//! v
//! end
//! ```
//!
//! Floats use `{:.16e}`: 17 significant digits, enough for every `f64` to
//! read back bit for bit. A file without the closing `end` is rejected.

use std::fmt::Write as _;
use std::path::Path;

use disco_core::metrics::EvalConfig;
use disco_core::models::{ModelSet, Network, VariantKind};
use disco_core::numgrad::{AdamConfig, AdamState, MlpParams, MlpSpec};
use disco_core::trainer::{Optimizers, TrainState};
use disco_core::{Matrix, Rng};

use crate::config::{
    format_activation, parse_activation, parse_config, render_config, ExperimentConfig,
};
use crate::error::{Error, IoContext, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "disco-checkpoint";

/// A resumable training state with the evaluation settings of its run.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: TrainState,
    pub eval: EvalConfig,
}

fn write_params(out: &mut String, p: &MlpParams) {
    for (l, (w, b)) in p.weights.iter().zip(&p.biases).enumerate() {
        let _ = writeln!(out, "w {l} {} {}", w.rows(), w.cols());
        for i in 0..w.rows() {
            write_values(out, w.row(i));
        }
        let _ = writeln!(out, "b {l} {}", b.len());
        write_values(out, b);
    }
}

fn write_values(out: &mut String, values: &[f64]) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

fn write_adam(out: &mut String, name: &str, s: &AdamState) {
    let h = &s.hyper;
    let _ = writeln!(out, "adam {name}");
    let _ = writeln!(out, "t {}", s.t);
    out.push_str("hyper ");
    write_values(out, &[h.lr, h.beta1, h.beta2, h.epsilon, h.weight_decay]);
    out.push_str("m\n");
    write_params(out, &s.m);
    out.push_str("v\n");
    write_params(out, &s.v);
}

pub fn render_checkpoint(state: &TrainState, eval: &EvalConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(out, "variant {}", state.models.kind);
    let _ = writeln!(out, "iteration {}", state.iteration);
    let r = state.rng.state();
    let _ = writeln!(
        out,
        "rng {:016x} {:016x} {:016x} {:016x}",
        r[0], r[1], r[2], r[3]
    );
    let cfg = render_config(&ExperimentConfig {
        train: state.config.clone(),
        eval: eval.clone(),
    });
    let _ = writeln!(out, "config {}", cfg.lines().count());
    out.push_str(&cfg);
    for (name, net) in state.models.networks() {
        let _ = writeln!(out, "network {name}");
        let dims: Vec<String> = net.spec.layer_dims().iter().map(usize::to_string).collect();
        let _ = writeln!(out, "layers {}", dims.join(" "));
        let acts: Vec<String> = net
            .spec
            .activations()
            .iter()
            .map(|&a| format_activation(a))
            .collect();
        let _ = writeln!(out, "activations {}", acts.join(" "));
        write_params(&mut out, &net.params);
    }
    let o = &state.optimizers;
    let adams = [
        ("g_ab", Some(&o.g_ab)),
        ("g_ba", o.g_ba.as_ref()),
        ("d_a", o.d_a.as_ref()),
        ("d_b", Some(&o.d_b)),
    ];
    for (name, s) in adams {
        if let Some(s) = s {
            write_adam(&mut out, name, s);
        }
    }
    out.push_str("end\n");
    out
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Persistence {
            line: self.line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => {
                self.line += 1;
                Err(self.err("unexpected end of file (truncated checkpoint?)"))
            }
        }
    }

    /// Reads a line starting with `keyword` and returns the remaining tokens.
    fn expect(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some(k) if k == keyword => Ok(tokens.collect()),
            _ => Err(self.err(format!("expected `{keyword}`, found {line:?}"))),
        }
    }

    fn expect_n(&mut self, keyword: &str, n: usize) -> Result<Vec<&'a str>> {
        let tokens = self.expect(keyword)?;
        if tokens.len() != n {
            return Err(self.err(format!(
                "`{keyword}` takes {n} fields, found {}",
                tokens.len()
            )));
        }
        Ok(tokens)
    }

    fn int<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| self.err(format!("bad integer {s:?}")))
    }

    fn values(&mut self, n: usize) -> Result<Vec<f64>> {
        let line = self.next()?;
        let mut out = Vec::with_capacity(n);
        for tok in line.split_whitespace() {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => return Err(self.err(format!("bad number {tok:?}"))),
            }
        }
        if out.len() != n {
            return Err(self.err(format!("expected {n} values, found {}", out.len())));
        }
        Ok(out)
    }

    fn params(&mut self, spec: &MlpSpec) -> Result<MlpParams> {
        let dims = spec.layer_dims();
        let mut p = MlpParams::zeros(spec);
        for l in 0..spec.num_layers() {
            let (rows, cols) = (dims[l], dims[l + 1]);
            let head = self.expect_n("w", 3)?;
            let got: (usize, usize, usize) =
                (self.int(head[0])?, self.int(head[1])?, self.int(head[2])?);
            if got != (l, rows, cols) {
                return Err(self.err(format!("expected weights {l} {rows}x{cols}, found {got:?}")));
            }
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                data.extend(self.values(cols)?);
            }
            p.weights[l] = Matrix::from_vec(rows, cols, data)?;
            let head = self.expect_n("b", 2)?;
            let got: (usize, usize) = (self.int(head[0])?, self.int(head[1])?);
            if got != (l, cols) {
                return Err(self.err(format!("expected bias {l} of length {cols}, found {got:?}")));
            }
            p.biases[l] = self.values(cols)?;
        }
        Ok(p)
    }

    fn network(&mut self, name: &str) -> Result<Network> {
        self.expect_n("network", 1).and_then(|t| {
            if t[0] == name {
                Ok(())
            } else {
                Err(self.err(format!("expected network {name}, found {}", t[0])))
            }
        })?;
        let layers = self.expect("layers")?;
        let dims = layers
            .iter()
            .map(|s| self.int(s))
            .collect::<Result<Vec<usize>>>()?;
        let acts = self.expect("activations")?;
        let acts = acts
            .iter()
            .map(|s| parse_activation(s).map_err(|m| self.err(m)))
            .collect::<Result<Vec<_>>>()?;
        let spec = MlpSpec::new(dims, acts).map_err(|e| self.err(e.to_string()))?;
        let params = self.params(&spec)?;
        Ok(Network::new(spec, params)?)
    }

    fn adam(&mut self, name: &str, spec: &MlpSpec) -> Result<AdamState> {
        let t = self.expect_n("adam", 1)?;
        if t[0] != name {
            return Err(self.err(format!("expected optimizer {name}, found {}", t[0])));
        }
        let t = self.expect_n("t", 1)?;
        let t: u64 = self.int(t[0])?;
        let h = self.expect_n("hyper", 5)?;
        let mut hv = [0.0; 5];
        for (slot, tok) in hv.iter_mut().zip(&h) {
            *slot = tok
                .parse()
                .map_err(|_| self.err(format!("bad number {tok:?}")))?;
        }
        let hyper = AdamConfig {
            lr: hv[0],
            beta1: hv[1],
            beta2: hv[2],
            epsilon: hv[3],
            weight_decay: hv[4],
        };
        hyper.validate().map_err(|e| self.err(e.to_string()))?;
        self.expect_n("m", 0)?;
        let m = self.params(spec)?;
        self.expect_n("v", 0)?;
        let v = self.params(spec)?;
        Ok(AdamState { m, v, t, hyper })
    }
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut r = Reader::new(text);
    let head = r.expect_n(MAGIC, 1)?;
    let version: u32 = r.int(head[0])?;
    if version != FORMAT_VERSION {
        return Err(r.err(format!(
            "unsupported format version {version} (this build reads {FORMAT_VERSION})"
        )));
    }
    let kind: VariantKind = r.expect_n("variant", 1)?[0]
        .parse()
        .map_err(|e: disco_core::Error| r.err(e.to_string()))?;
    let tok = r.expect_n("iteration", 1)?[0];
    let iteration: u64 = r.int(tok)?;
    let words = r.expect_n("rng", 4)?;
    let mut s = [0u64; 4];
    for (slot, w) in s.iter_mut().zip(&words) {
        *slot = u64::from_str_radix(w, 16).map_err(|_| r.err(format!("bad rng word {w:?}")))?;
    }
    let rng = Rng::from_state(s).ok_or_else(|| r.err("all-zero rng state"))?;

    let tok = r.expect_n("config", 1)?[0];
    let n: usize = r.int(tok)?;
    let start = r.line + 1;
    let mut cfg_text = String::new();
    for _ in 0..n {
        cfg_text.push_str(r.next()?);
        cfg_text.push('\n');
    }
    let cfg = parse_config(&cfg_text).map_err(|e| Error::Persistence {
        line: start,
        message: format!("embedded config: {e}"),
    })?;
    if cfg.train.variant != kind {
        return Err(r.err(format!(
            "variant {kind} disagrees with embedded config ({})",
            cfg.train.variant
        )));
    }

    let g_ab = r.network("g_ab")?;
    let g_ba = if kind == VariantKind::StandardGan {
        None
    } else {
        Some(r.network("g_ba")?)
    };
    let d_a = if kind == VariantKind::DiscoGan {
        Some(r.network("d_a")?)
    } else {
        None
    };
    let d_b = r.network("d_b")?;
    let opt_g_ab = r.adam("g_ab", &g_ab.spec)?;
    let opt_g_ba = match &g_ba {
        Some(n) => Some(r.adam("g_ba", &n.spec)?),
        None => None,
    };
    let opt_d_a = match &d_a {
        Some(n) => Some(r.adam("d_a", &n.spec)?),
        None => None,
    };
    let opt_d_b = r.adam("d_b", &d_b.spec)?;
    r.expect_n("end", 0)?;
    if let Some((i, extra)) = r.lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::Persistence {
            line: i + 1,
            message: format!("trailing content {extra:?}"),
        });
    }

    let models = ModelSet::new(kind, g_ab, g_ba, d_a, d_b).map_err(|e| r.err(e.to_string()))?;
    let optimizers = Optimizers {
        g_ab: opt_g_ab,
        g_ba: opt_g_ba,
        d_a: opt_d_a,
        d_b: opt_d_b,
    };
    let state = TrainState::from_parts(cfg.train, models, optimizers, rng, iteration)
        .map_err(|e| r.err(e.to_string()))?;
    Ok(Checkpoint {
        state,
        eval: cfg.eval,
    })
}

/// Writes via a temporary sibling and a rename, so an interrupted save
/// never leaves a half-written checkpoint under `path`.
pub fn save_checkpoint(state: &TrainState, eval: &EvalConfig, path: &Path) -> Result<()> {
    let text = render_checkpoint(state, eval);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, text).at(&tmp)?;
    std::fs::rename(&tmp, path).at(path)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).at(path)?;
    parse_checkpoint(&text)
}

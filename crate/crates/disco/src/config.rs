//! `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Every key is optional; absent keys keep their defaults. Unknown or
//! repeated keys are errors. Floats are written in Rust's shortest
//! round-trip form, so `parse_config(&render_config(c)) == c` exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use disco_core::domains::{DomainSpec, Point};
use disco_core::metrics::EvalConfig;
use disco_core::models::VariantKind;
use disco_core::numgrad::Activation;
use disco_core::trainer::{ReconDistance, TrainConfig};

use crate::error::{Error, IoContext, Result};

/// Training plus evaluation settings for one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

const KEYS: &[&str] = &[
    "variant",
    "iterations",
    "batch_size",
    "seed",
    "log_every",
    "recon_distance",
    "lr",
    "beta1",
    "beta2",
    "epsilon",
    "weight_decay",
    "gen_hidden",
    "disc_hidden",
    "hidden_activation",
    "gen_output_activation",
    "domain_a.kind",
    "domain_a.modes",
    "domain_a.stddev",
    "domain_a.start",
    "domain_a.step",
    "domain_a.center",
    "domain_a.radius",
    "domain_a.angle_start",
    "domain_a.angle_end",
    "domain_b.kind",
    "domain_b.modes",
    "domain_b.stddev",
    "domain_b.start",
    "domain_b.step",
    "domain_b.center",
    "domain_b.radius",
    "domain_b.angle_start",
    "domain_b.angle_end",
    "eval.tau",
    "eval.samples_per_mode",
    "eval.rmse_samples",
    "eval.landscape_nx",
    "eval.landscape_ny",
    "eval.landscape_margin",
    "eval.seed",
];

type Check<T> = fn(&T) -> Option<&'static str>;

struct Entries<'a> {
    map: BTreeMap<&'a str, (usize, &'a str)>,
}

impl<'a> Entries<'a> {
    fn read(text: &'a str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(config_err(line, content, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(config_err(line, key, "unknown key"));
            }
            if let Some((first, _)) = map.insert(key, (line, value)) {
                return Err(config_err(
                    line,
                    key,
                    &format!("already set on line {first}"),
                ));
            }
        }
        Ok(Entries { map })
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.0)
    }

    fn get<T>(
        &self,
        key: &str,
        parse: fn(&str) -> Result<T, String>,
        check: Check<T>,
    ) -> Result<Option<T>> {
        let Some(&(line, value)) = self.map.get(key) else {
            return Ok(None);
        };
        let parsed = parse(value).map_err(|m| config_err(line, key, &m))?;
        if let Some(m) = check(&parsed) {
            return Err(config_err(line, key, m));
        }
        Ok(Some(parsed))
    }

    fn set<T>(
        &self,
        key: &str,
        slot: &mut T,
        parse: fn(&str) -> Result<T, String>,
        check: Check<T>,
    ) -> Result<()> {
        if let Some(v) = self.get(key, parse, check)? {
            *slot = v;
        }
        Ok(())
    }
}

fn config_err(line: usize, key: &str, message: &str) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn any<T>(_: &T) -> Option<&'static str> {
    None
}

fn at_least_one(v: &u64) -> Option<&'static str> {
    (*v == 0).then_some("must be at least 1")
}

fn positive_count(v: &usize) -> Option<&'static str> {
    (*v == 0).then_some("must be at least 1")
}

fn at_least_two(v: &usize) -> Option<&'static str> {
    (*v < 2).then_some("must be at least 2")
}

fn positive(v: &f64) -> Option<&'static str> {
    (*v <= 0.0).then_some("must be positive")
}

fn nonnegative(v: &f64) -> Option<&'static str> {
    (*v < 0.0).then_some("must be nonnegative")
}

fn beta(v: &f64) -> Option<&'static str> {
    (!(0.0..1.0).contains(v)).then_some("must lie in [0, 1)")
}

fn open_unit(v: &f64) -> Option<&'static str> {
    (!(*v > 0.0 && *v < 1.0)).then_some("must lie in (0, 1)")
}

#[allow(clippy::ptr_arg)] // must match the `set` validator signature
fn widths(v: &Vec<usize>) -> Option<&'static str> {
    v.contains(&0).then_some("layer widths must be at least 1")
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse()
        .map_err(|_| format!("expected a nonnegative integer, got {s:?}"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse()
        .map_err(|_| format!("expected a nonnegative integer, got {s:?}"))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got {s:?}")),
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts[..] {
        [x, y] => Ok([parse_f64(x)?, parse_f64(y)?]),
        _ => Err(format!("expected `x, y`, got {s:?}")),
    }
}

fn parse_widths(s: &str) -> Result<Vec<usize>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|w| parse_usize(w.trim())).collect()
}

fn parse_variant(s: &str) -> Result<VariantKind, String> {
    s.parse()
        .map_err(|_| format!("expected standard, recon or disco, got {s:?}"))
}

fn parse_distance(s: &str) -> Result<ReconDistance, String> {
    match s {
        "mse" => Ok(ReconDistance::Mse),
        _ => Err(format!("expected mse, got {s:?}")),
    }
}

/// Parses `relu`, `leaky_relu:<slope>`, `sigmoid` or `identity`.
pub fn parse_activation(s: &str) -> Result<Activation, String> {
    match s {
        "relu" => Ok(Activation::Relu),
        "sigmoid" => Ok(Activation::Sigmoid),
        "identity" => Ok(Activation::Identity),
        _ => match s.strip_prefix("leaky_relu:") {
            Some(slope) => {
                let slope = parse_f64(slope.trim())?;
                if slope > 0.0 && slope < 1.0 {
                    Ok(Activation::LeakyRelu(slope))
                } else {
                    Err(format!("leaky_relu slope {slope} must lie in (0, 1)"))
                }
            }
            None => Err(format!(
                "expected relu, leaky_relu:<slope>, sigmoid or identity, got {s:?}"
            )),
        },
    }
}

pub fn format_activation(a: Activation) -> String {
    match a {
        Activation::Relu => "relu".into(),
        Activation::LeakyRelu(s) => format!("leaky_relu:{s:?}"),
        Activation::Sigmoid => "sigmoid".into(),
        Activation::Identity => "identity".into(),
    }
}

fn parse_kind(s: &str) -> Result<&'static str, String> {
    match s {
        "row" => Ok("row"),
        "arc" => Ok("arc"),
        _ => Err(format!("expected row or arc, got {s:?}")),
    }
}

/// A domain's settings. Missing fields default to the default value of the
/// chosen kind: row fields come from the default A domain, arc fields from
/// the default B domain, whichever side is being configured.
fn parse_domain(e: &Entries, side: &str, default: DomainSpec) -> Result<DomainSpec> {
    let key = |field: &str| format!("domain_{side}.{field}");
    let default_kind = match default {
        DomainSpec::Row { .. } => "row",
        DomainSpec::Arc { .. } => "arc",
    };
    let kind = e
        .get(&key("kind"), parse_kind, any)?
        .unwrap_or(default_kind);
    let mut spec = if kind == default_kind {
        default
    } else if kind == "row" {
        DomainSpec::default_a()
    } else {
        DomainSpec::default_b()
    };
    let foreign: &[&str] = match kind {
        "row" => &["center", "radius", "angle_start", "angle_end"],
        _ => &["start", "step"],
    };
    for field in foreign {
        let k = key(field);
        if e.map.contains_key(k.as_str()) {
            return Err(config_err(
                e.line(&k),
                &k,
                &format!("not used by a {kind} domain"),
            ));
        }
    }
    match &mut spec {
        DomainSpec::Row {
            modes,
            start,
            step,
            stddev,
        } => {
            e.set(&key("modes"), modes, parse_usize, positive_count)?;
            e.set(&key("stddev"), stddev, parse_f64, positive)?;
            e.set(&key("start"), start, parse_point, any)?;
            e.set(&key("step"), step, parse_point, any)?;
        }
        DomainSpec::Arc {
            modes,
            center,
            radius,
            angle_start,
            angle_end,
            stddev,
        } => {
            e.set(&key("modes"), modes, parse_usize, positive_count)?;
            e.set(&key("stddev"), stddev, parse_f64, positive)?;
            e.set(&key("center"), center, parse_point, any)?;
            e.set(&key("radius"), radius, parse_f64, positive)?;
            e.set(&key("angle_start"), angle_start, parse_f64, any)?;
            e.set(&key("angle_end"), angle_end, parse_f64, any)?;
        }
    }
    spec.build().map_err(|err| {
        config_err(
            e.line(&key("kind")),
            &format!("domain_{side}"),
            &err.to_string(),
        )
    })?;
    Ok(spec)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let e = Entries::read(text)?;
    let mut cfg = ExperimentConfig::default();
    let t = &mut cfg.train;
    e.set("variant", &mut t.variant, parse_variant, any)?;
    e.set("iterations", &mut t.iterations, parse_u64, at_least_one)?;
    e.set("batch_size", &mut t.batch_size, parse_usize, positive_count)?;
    e.set("seed", &mut t.seed, parse_u64, any)?;
    e.set("log_every", &mut t.log_every, parse_u64, at_least_one)?;
    e.set("recon_distance", &mut t.recon_distance, parse_distance, any)?;
    e.set("lr", &mut t.adam.lr, parse_f64, positive)?;
    e.set("beta1", &mut t.adam.beta1, parse_f64, beta)?;
    e.set("beta2", &mut t.adam.beta2, parse_f64, beta)?;
    e.set("epsilon", &mut t.adam.epsilon, parse_f64, positive)?;
    e.set(
        "weight_decay",
        &mut t.adam.weight_decay,
        parse_f64,
        nonnegative,
    )?;
    e.set("gen_hidden", &mut t.dims.gen_hidden, parse_widths, widths)?;
    e.set("disc_hidden", &mut t.dims.disc_hidden, parse_widths, widths)?;
    e.set(
        "hidden_activation",
        &mut t.dims.hidden_activation,
        parse_activation,
        any,
    )?;
    e.set(
        "gen_output_activation",
        &mut t.dims.gen_output_activation,
        parse_activation,
        any,
    )?;
    t.domain_a = parse_domain(&e, "a", t.domain_a)?;
    t.domain_b = parse_domain(&e, "b", t.domain_b)?;

    let v = &mut cfg.eval;
    e.set("eval.tau", &mut v.tau, parse_f64, open_unit)?;
    e.set(
        "eval.samples_per_mode",
        &mut v.samples_per_mode,
        parse_usize,
        positive_count,
    )?;
    e.set(
        "eval.rmse_samples",
        &mut v.rmse_samples,
        parse_usize,
        positive_count,
    )?;
    e.set(
        "eval.landscape_nx",
        &mut v.landscape_nx,
        parse_usize,
        at_least_two,
    )?;
    e.set(
        "eval.landscape_ny",
        &mut v.landscape_ny,
        parse_usize,
        at_least_two,
    )?;
    e.set(
        "eval.landscape_margin",
        &mut v.landscape_margin,
        parse_f64,
        nonnegative,
    )?;
    e.set("eval.seed", &mut v.seed, parse_u64, any)?;

    // Per-key checks above should make these unreachable; kept as a backstop.
    cfg.train
        .validate()
        .map_err(|err| config_err(0, "training", &err.to_string()))?;
    cfg.eval
        .validate()
        .map_err(|err| config_err(0, "eval", &err.to_string()))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).at(path)?;
    parse_config(&text)
}

fn point(p: Point) -> String {
    format!("{:?}, {:?}", p[0], p[1])
}

fn list(v: &[usize]) -> String {
    v.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn render_domain(out: &mut String, side: &str, spec: &DomainSpec) {
    let p = format!("domain_{side}");
    match *spec {
        DomainSpec::Row {
            modes,
            start,
            step,
            stddev,
        } => {
            let _ = writeln!(out, "{p}.kind = row");
            let _ = writeln!(out, "{p}.modes = {modes}");
            let _ = writeln!(out, "{p}.stddev = {stddev:?}");
            let _ = writeln!(out, "{p}.start = {}", point(start));
            let _ = writeln!(out, "{p}.step = {}", point(step));
        }
        DomainSpec::Arc {
            modes,
            center,
            radius,
            angle_start,
            angle_end,
            stddev,
        } => {
            let _ = writeln!(out, "{p}.kind = arc");
            let _ = writeln!(out, "{p}.modes = {modes}");
            let _ = writeln!(out, "{p}.stddev = {stddev:?}");
            let _ = writeln!(out, "{p}.center = {}", point(center));
            let _ = writeln!(out, "{p}.radius = {radius:?}");
            let _ = writeln!(out, "{p}.angle_start = {angle_start:?}");
            let _ = writeln!(out, "{p}.angle_end = {angle_end:?}");
        }
    }
}

/// Writes every key, including those at their default values.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let t = &cfg.train;
    let v = &cfg.eval;
    let mut out = String::new();
    let _ = writeln!(out, "# training");
    let _ = writeln!(out, "variant = {}", t.variant);
    let _ = writeln!(out, "iterations = {}", t.iterations);
    let _ = writeln!(out, "batch_size = {}", t.batch_size);
    let _ = writeln!(out, "seed = {}", t.seed);
    let _ = writeln!(out, "log_every = {}", t.log_every);
    let _ = writeln!(out, "recon_distance = {}", t.recon_distance.as_str());
    let _ = writeln!(out, "lr = {:?}", t.adam.lr);
    let _ = writeln!(out, "beta1 = {:?}", t.adam.beta1);
    let _ = writeln!(out, "beta2 = {:?}", t.adam.beta2);
    let _ = writeln!(out, "epsilon = {:?}", t.adam.epsilon);
    let _ = writeln!(out, "weight_decay = {:?}", t.adam.weight_decay);
    let _ = writeln!(out, "\n# networks");
    let _ = writeln!(out, "gen_hidden = {}", list(&t.dims.gen_hidden));
    let _ = writeln!(out, "disc_hidden = {}", list(&t.dims.disc_hidden));
    let _ = writeln!(
        out,
        "hidden_activation = {}",
        format_activation(t.dims.hidden_activation)
    );
    let _ = writeln!(
        out,
        "gen_output_activation = {}",
        format_activation(t.dims.gen_output_activation)
    );
    let _ = writeln!(out, "\n# domains");
    render_domain(&mut out, "a", &t.domain_a);
    render_domain(&mut out, "b", &t.domain_b);
    let _ = writeln!(out, "\n# evaluation");
    let _ = writeln!(out, "eval.tau = {:?}", v.tau);
    let _ = writeln!(out, "eval.samples_per_mode = {}", v.samples_per_mode);
    let _ = writeln!(out, "eval.rmse_samples = {}", v.rmse_samples);
    let _ = writeln!(out, "eval.landscape_nx = {}", v.landscape_nx);
    let _ = writeln!(out, "eval.landscape_ny = {}", v.landscape_ny);
    let _ = writeln!(out, "eval.landscape_margin = {:?}", v.landscape_margin);
    let _ = writeln!(out, "eval.seed = {}", v.seed);
    out
}

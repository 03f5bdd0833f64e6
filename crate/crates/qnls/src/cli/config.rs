//! Scenario files.
//!
//! A scenario is a UTF-8 text of `key = value` lines. Top-level keys come
//! first (`id`, optionally `preset`), followed by the sections `[model]`,
//! `[grid]`, `[initial]`, `[solver]` and `[analyses]`. `#` starts a comment.
//! A preset supplies every value; later keys override it.
//!
//! ```text
//! id = demo
//! preset = ex41
//!
//! [solver]
//! t_end = 2
//! ```
//!
//! Scalar families are written as sums of `c*s^p` terms, as `c*exp(k*s)`,
//! or as `0`. Numbers may be decimals or ratios such as `2/3`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::criteria::{MorawetzParams, SpacetimeParams};
use crate::dynamics::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::nonlinearity::{CriticalSign, NonlinearityModel, ScalarFamily, Term};

use super::presets;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub r_max: f64,
    pub nodes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { r_max: 40.0, nodes: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// `amplitude * exp(-r^2/width^2) * exp(i chirp r^2)`.
    ChirpedGaussian { amplitude: f64, width: f64, chirp: f64 },
    /// `amplitude * (1 + r^2/width^2)^(-(N-2)/2)`.
    Bubble { amplitude: f64, width: f64 },
    Zero,
}

impl InitialData {
    pub fn validate(&self, dimension: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        match *self {
            InitialData::ChirpedGaussian { amplitude, width, chirp } => {
                if !(amplitude >= 0.0 && amplitude.is_finite()) {
                    return bad(format!("amplitude = {amplitude} must be non-negative"));
                }
                if !(width > 0.0 && width.is_finite()) {
                    return bad(format!("width = {width} must be positive"));
                }
                if !chirp.is_finite() {
                    return bad("chirp must be finite".into());
                }
            }
            InitialData::Bubble { amplitude, width } => {
                if !(amplitude >= 0.0 && amplitude.is_finite()) {
                    return bad(format!("amplitude = {amplitude} must be non-negative"));
                }
                if !(width > 0.0 && width.is_finite()) {
                    return bad(format!("width = {width} must be positive"));
                }
                // |x|^2 |u0|^2 ~ r^(6-2N) must be integrable against r^(N-1).
                if dimension <= 6 {
                    return bad(format!("bubble data has infinite ∫|x u0|^2 for N = {dimension} <= 6"));
                }
            }
            InitialData::Zero => {}
        }
        Ok(())
    }

    pub fn field(&self, grid: Arc<RadialGrid>) -> Result<RadialField> {
        let n = grid.dimension() as f64;
        match *self {
            InitialData::ChirpedGaussian { amplitude, width, chirp } => RadialField::from_fn(grid, |r| {
                Complex64::from_polar(amplitude * (-(r * r) / (width * width)).exp(), chirp * r * r)
            }),
            InitialData::Bubble { amplitude, width } => RadialField::from_fn(grid, |r| {
                Complex64::new(amplitude * (1.0 + r * r / (width * width)).powf(-(n - 2.0) / 2.0), 0.0)
            }),
            InitialData::Zero => RadialField::from_fn(grid, |_| Complex64::new(0.0, 0.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Analyses {
    pub virial: bool,
    pub pseudoconformal: bool,
    pub morawetz: Option<MorawetzParams>,
    pub spacetime: Option<SpacetimeParams>,
    /// `t_min` of the decay fit.
    pub decay: Option<f64>,
    pub criteria: bool,
}

impl Analyses {
    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.virial {
            v.push("virial");
        }
        if self.pseudoconformal {
            v.push("pseudoconformal");
        }
        if self.morawetz.is_some() {
            v.push("morawetz");
        }
        if self.spacetime.is_some() {
            v.push("spacetime");
        }
        if self.decay.is_some() {
            v.push("decay");
        }
        if self.criteria {
            v.push("criteria");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub model: NonlinearityModel,
    pub grid: GridSpec,
    pub initial: InitialData,
    pub solver: SolverConfig,
    pub analyses: Analyses,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.id.is_empty() || self.id.chars().any(|c| !(c.is_ascii_alphanumeric() || c == '_' || c == '-')) {
            return bad(format!("id {:?} must be a nonempty name of letters, digits, '_' or '-'", self.id));
        }
        RadialGrid::new(self.model.dimension, self.grid.r_max, self.grid.nodes)?;
        self.initial.validate(self.model.dimension)?;
        self.solver.validate()?;
        if self.model.sign == CriticalSign::Focusing {
            let a = &self.analyses;
            for (on, name) in [
                (a.pseudoconformal, "pseudoconformal"),
                (a.morawetz.is_some(), "morawetz"),
                (a.spacetime.is_some(), "spacetime"),
                (a.decay.is_some(), "decay"),
            ] {
                if on {
                    return bad(format!("analysis {name} needs a defocusing or absent critical term, sign is focusing"));
                }
            }
        }
        if let Some(t) = self.analyses.decay {
            if !(t >= 1.0) {
                return bad(format!("decay t_min = {t} must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Arc<RadialGrid>> {
        Ok(Arc::new(RadialGrid::new(self.model.dimension, self.grid.r_max, self.grid.nodes)?))
    }

    pub fn initial_field(&self) -> Result<RadialField> {
        self.initial.field(self.build_grid()?)
    }

    /// Canonical text form. Parsing it gives back an equal scenario.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let _ = writeln!(s, "id = {}", self.id);
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "dimension = {}", m.dimension);
        let _ = writeln!(s, "h = {}", family_text(&m.h));
        let _ = writeln!(s, "f1 = {}", family_text(&m.f1));
        let _ = writeln!(s, "f2 = {}", family_text(&m.f2));
        let _ = writeln!(s, "a = {}", m.a);
        let _ = writeln!(s, "sign = {}", m.sign.as_str());
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "r_max = {}", self.grid.r_max);
        let _ = writeln!(s, "nodes = {}", self.grid.nodes);
        let _ = writeln!(s, "\n[initial]");
        match self.initial {
            InitialData::ChirpedGaussian { amplitude, width, chirp } => {
                let _ = writeln!(s, "family = chirped_gaussian");
                let _ = writeln!(s, "amplitude = {amplitude}");
                let _ = writeln!(s, "width = {width}");
                let _ = writeln!(s, "chirp = {chirp}");
            }
            InitialData::Bubble { amplitude, width } => {
                let _ = writeln!(s, "family = bubble");
                let _ = writeln!(s, "amplitude = {amplitude}");
                let _ = writeln!(s, "width = {width}");
            }
            InitialData::Zero => {
                let _ = writeln!(s, "family = zero");
            }
        }
        let c = &self.solver;
        let _ = writeln!(s, "\n[solver]");
        let _ = writeln!(s, "dt = {}", c.dt);
        let _ = writeln!(s, "dt_min = {}", c.dt_min);
        let _ = writeln!(s, "t_end = {}", c.t_end);
        let _ = writeln!(s, "picard_tol = {}", c.picard_tol);
        let _ = writeln!(s, "picard_max_iters = {}", c.picard_max_iters);
        let _ = writeln!(s, "blowup_factor = {}", c.blowup_factor);
        let _ = writeln!(s, "output_stride = {}", c.output_stride);
        let _ = writeln!(s, "checkpoint_every = {}", c.checkpoint_every);
        let _ = writeln!(s, "density_shift = {}", c.density_shift);
        let a = &self.analyses;
        let _ = writeln!(s, "\n[analyses]");
        let _ = writeln!(s, "enabled = {}", a.names().join(", "));
        if let Some(p) = a.morawetz {
            let _ = writeln!(s, "morawetz_theta = {}", p.theta);
            let _ = writeln!(s, "morawetz_mu = {}", p.mu);
            let _ = writeln!(s, "morawetz_sigma = {}", p.sigma);
            let _ = writeln!(s, "morawetz_p = {}", p.p);
        }
        if let Some(p) = a.spacetime {
            let _ = writeln!(s, "spacetime_p = {}", p.p);
            let _ = writeln!(s, "spacetime_q = {}", p.q);
            let _ = writeln!(s, "spacetime_r = {}", p.r);
        }
        if let Some(t) = a.decay {
            let _ = writeln!(s, "decay_t_min = {t}");
        }
        s
    }
}

pub fn family_text(f: &ScalarFamily) -> String {
    match f {
        ScalarFamily::Zero => "0".into(),
        ScalarFamily::PowerSum(terms) => {
            terms.iter().map(|t| format!("{}*s^{}", t.coeff, t.exponent)).collect::<Vec<_>>().join(" + ")
        }
        ScalarFamily::Exponential { coeff, rate } => format!("{coeff}*exp({rate}*s)"),
    }
}

/// A decimal literal or a ratio `a/b` of two decimals.
pub fn parse_number(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    let one = |x: &str| -> std::result::Result<f64, String> {
        let v: f64 = x.trim().parse().map_err(|_| format!("not a number: {x:?}"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("not a finite number: {x:?}"))
        }
    };
    match t.split_once('/') {
        Some((a, b)) => {
            let d = one(b)?;
            if d == 0.0 {
                return Err(format!("zero denominator in {t:?}"));
            }
            Ok(one(a)? / d)
        }
        None => one(t),
    }
}

pub fn parse_family(text: &str) -> std::result::Result<ScalarFamily, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t == "0" || t == "zero" {
        return Ok(ScalarFamily::Zero);
    }
    if let Some(pos) = t.find("exp(") {
        let coeff = match t[..pos].strip_suffix('*') {
            Some(c) => parse_number(c)?,
            None if pos == 0 => 1.0,
            None => return Err(format!("expected c*exp(k*s), got {text:?}")),
        };
        let inner = t[pos + 4..].strip_suffix(')').ok_or_else(|| format!("unclosed exp( in {text:?}"))?;
        let rate = match inner.strip_suffix("*s") {
            Some(k) => parse_number(k)?,
            None if inner == "s" => 1.0,
            None => return Err(format!("expected exp(k*s), got {text:?}")),
        };
        return Ok(ScalarFamily::Exponential { coeff, rate });
    }
    let mut terms = Vec::new();
    for part in t.split('+') {
        if part.is_empty() {
            return Err(format!("empty term in {text:?}"));
        }
        let (coeff, power) = match part.split_once("s") {
            Some((c, p)) => {
                let coeff = if c.is_empty() {
                    1.0
                } else {
                    parse_number(c.strip_suffix('*').ok_or_else(|| format!("expected c*s^p, got {part:?}"))?)?
                };
                let power = if p.is_empty() {
                    1.0
                } else {
                    parse_number(p.strip_prefix('^').ok_or_else(|| format!("expected s^p, got {part:?}"))?)?
                };
                (coeff, power)
            }
            None => return Err(format!("constant term {part:?} is not allowed")),
        };
        terms.push(Term::new(coeff, power));
    }
    Ok(ScalarFamily::PowerSum(terms))
}

fn parse_sign(v: &str) -> std::result::Result<CriticalSign, String> {
    match v {
        "defocusing" => Ok(CriticalSign::Defocusing),
        "focusing" => Ok(CriticalSign::Focusing),
        "absent" => Ok(CriticalSign::Absent),
        _ => Err(format!("sign must be defocusing, focusing or absent, got {v:?}")),
    }
}

/// Values collected before the model can be built.
struct Draft {
    id: Option<String>,
    dimension: usize,
    h: ScalarFamily,
    f1: ScalarFamily,
    f2: ScalarFamily,
    a: f64,
    sign: CriticalSign,
    grid: GridSpec,
    family: Option<String>,
    amplitude: Option<f64>,
    width: Option<f64>,
    chirp: Option<f64>,
    solver: SolverConfig,
    enabled: Option<Vec<String>>,
    morawetz: MorawetzParams,
    spacetime: [Option<f64>; 3],
    decay_t_min: Option<f64>,
}

impl Draft {
    fn from_scenario(s: Option<Scenario>) -> Self {
        let (model, grid, solver) = match &s {
            Some(s) => (s.model.clone(), s.grid, s.solver),
            None => (NonlinearityModel::free(3).expect("free model"), GridSpec::default(), SolverConfig::default()),
        };
        let (family, amplitude, width, chirp) = match s.as_ref().map(|s| s.initial) {
            Some(InitialData::ChirpedGaussian { amplitude, width, chirp }) => {
                (Some("chirped_gaussian".to_string()), Some(amplitude), Some(width), Some(chirp))
            }
            Some(InitialData::Bubble { amplitude, width }) => (Some("bubble".to_string()), Some(amplitude), Some(width), None),
            Some(InitialData::Zero) => (Some("zero".to_string()), None, None, None),
            None => (None, None, None, None),
        };
        let an = s.as_ref().map(|s| s.analyses).unwrap_or_default();
        Draft {
            id: s.as_ref().map(|s| s.id.clone()),
            dimension: model.dimension,
            h: model.h,
            f1: model.f1,
            f2: model.f2,
            a: model.a,
            sign: model.sign,
            grid,
            family,
            amplitude,
            width,
            chirp,
            solver,
            enabled: s.as_ref().map(|_| an.names().into_iter().map(String::from).collect()),
            morawetz: an.morawetz.unwrap_or_default(),
            spacetime: match an.spacetime {
                Some(p) => [Some(p.p), Some(p.q), Some(p.r)],
                None => [None; 3],
            },
            decay_t_min: an.decay,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Top,
    Model,
    Grid,
    Initial,
    Solver,
    Analyses,
}

pub fn parse_config(text: &str) -> Result<Scenario> {
    let mut draft = Draft::from_scenario(None);
    let mut section = Section::Top;
    let mut seen_key = false;
    let mut explicit_id: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |m: String| Error::Parse { line: line_no, message: m };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| err(format!("unterminated section header {line:?}")))?;
            section = match name.trim() {
                "model" => Section::Model,
                "grid" => Section::Grid,
                "initial" => Section::Initial,
                "solver" => Section::Solver,
                "analyses" => Section::Analyses,
                other => return Err(err(format!("unknown section [{other}]"))),
            };
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(err(format!("empty value for {key}")));
        }
        let num = || parse_number(value).map_err(|m| err(m));
        let count = || -> Result<usize> {
            value.parse::<usize>().map_err(|_| err(format!("{key} must be a non-negative integer, got {value:?}")))
        };
        match (section, key) {
            (Section::Top, "id") => explicit_id = Some(value.to_string()),
            (Section::Top, "preset") => {
                if seen_key {
                    return Err(err("preset must come before any other setting".into()));
                }
                let base = presets::preset(value).ok_or_else(|| err(format!("unknown preset {value:?}")))?;
                draft = Draft::from_scenario(Some(base));
            }
            (Section::Model, "dimension") => draft.dimension = count()?,
            (Section::Model, "h") => draft.h = parse_family(value).map_err(|m| err(m))?,
            (Section::Model, "f1") => draft.f1 = parse_family(value).map_err(|m| err(m))?,
            (Section::Model, "f2") => draft.f2 = parse_family(value).map_err(|m| err(m))?,
            (Section::Model, "a") => draft.a = num()?,
            (Section::Model, "sign") => draft.sign = parse_sign(value).map_err(|m| err(m))?,
            (Section::Grid, "r_max") => draft.grid.r_max = num()?,
            (Section::Grid, "nodes") => draft.grid.nodes = count()?,
            (Section::Initial, "family") => {
                match value {
                    "chirped_gaussian" | "bubble" | "zero" => {}
                    _ => return Err(err(format!("family must be chirped_gaussian, bubble or zero, got {value:?}"))),
                }
                draft.family = Some(value.to_string());
            }
            (Section::Initial, "amplitude") => draft.amplitude = Some(num()?),
            (Section::Initial, "width") => draft.width = Some(num()?),
            (Section::Initial, "chirp") => draft.chirp = Some(num()?),
            (Section::Solver, "dt") => draft.solver.dt = num()?,
            (Section::Solver, "dt_min") => draft.solver.dt_min = num()?,
            (Section::Solver, "t_end") => draft.solver.t_end = num()?,
            (Section::Solver, "picard_tol") => draft.solver.picard_tol = num()?,
            (Section::Solver, "picard_max_iters") => draft.solver.picard_max_iters = count()?,
            (Section::Solver, "blowup_factor") => draft.solver.blowup_factor = num()?,
            (Section::Solver, "output_stride") => draft.solver.output_stride = count()?,
            (Section::Solver, "checkpoint_every") => draft.solver.checkpoint_every = count()?,
            (Section::Solver, "density_shift") => draft.solver.density_shift = num()?,
            (Section::Analyses, "enabled") => {
                let mut names = Vec::new();
                for n in value.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                    match n {
                        "virial" | "pseudoconformal" | "morawetz" | "spacetime" | "decay" | "criteria" => {
                            names.push(n.to_string())
                        }
                        _ => return Err(err(format!("unknown analysis {n:?}"))),
                    }
                }
                draft.enabled = Some(names);
            }
            (Section::Analyses, "morawetz_theta") => draft.morawetz.theta = num()?,
            (Section::Analyses, "morawetz_mu") => draft.morawetz.mu = num()?,
            (Section::Analyses, "morawetz_sigma") => draft.morawetz.sigma = num()?,
            (Section::Analyses, "morawetz_p") => draft.morawetz.p = num()?,
            (Section::Analyses, "spacetime_p") => draft.spacetime[0] = Some(num()?),
            (Section::Analyses, "spacetime_q") => draft.spacetime[1] = Some(num()?),
            (Section::Analyses, "spacetime_r") => draft.spacetime[2] = Some(num()?),
            (Section::Analyses, "decay_t_min") => draft.decay_t_min = Some(num()?),
            (_, key) => return Err(err(format!("unknown key {key:?} in this section"))),
        }
        seen_key = true;
    }
    finish(draft, explicit_id)
}

fn finish(d: Draft, explicit_id: Option<String>) -> Result<Scenario> {
    let bad = |m: String| Error::Validation(m);
    let id = explicit_id.or(d.id).ok_or_else(|| bad("missing id".into()))?;
    let model = NonlinearityModel::new(d.dimension, d.h, d.f1, d.f2, d.a, d.sign)?;
    let need = |v: Option<f64>, k: &str| v.ok_or_else(|| bad(format!("[initial] needs {k}")));
    let initial = match d.family.as_deref() {
        Some("chirped_gaussian") => InitialData::ChirpedGaussian {
            amplitude: need(d.amplitude, "amplitude")?,
            width: need(d.width, "width")?,
            chirp: d.chirp.unwrap_or(0.0),
        },
        Some("bubble") => InitialData::Bubble { amplitude: need(d.amplitude, "amplitude")?, width: need(d.width, "width")? },
        Some(_) => InitialData::Zero,
        None => return Err(bad("[initial] needs family".into())),
    };
    let enabled = d.enabled.unwrap_or_default();
    let on = |n: &str| enabled.iter().any(|e| e == n);
    let spacetime = if on("spacetime") {
        match d.spacetime {
            [Some(p), Some(q), Some(r)] => Some(SpacetimeParams { p, q, r }),
            _ => return Err(bad("spacetime analysis needs spacetime_p, spacetime_q and spacetime_r".into())),
        }
    } else {
        None
    };
    let analyses = Analyses {
        virial: on("virial"),
        pseudoconformal: on("pseudoconformal"),
        morawetz: on("morawetz").then_some(d.morawetz),
        spacetime,
        decay: if on("decay") { Some(d.decay_t_min.unwrap_or(1.0)) } else { None },
        criteria: on("criteria"),
    };
    let s = Scenario { id, model, grid: d.grid, initial, solver: d.solver, analyses };
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "id = m\n[model]\nh = s\nf1 = 0\nf2 = 0\na = 1\nsign = defocusing\n[grid]\nr_max = 20\nnodes = 256\n[initial]\nfamily = chirped_gaussian\namplitude = 1\nwidth = 2\n[solver]\ndt = 1e-3\nt_end = 0.1\n";

    #[test]
    fn minimal_config_has_no_analyses() {
        let s = parse_config(MINIMAL).unwrap();
        assert_eq!(s.analyses, Analyses::default());
        assert_eq!(s.initial, InitialData::ChirpedGaussian { amplitude: 1.0, width: 2.0, chirp: 0.0 });
        assert_eq!(s.grid, GridSpec { r_max: 20.0, nodes: 256 });
    }

    #[test]
    fn families_round_trip() {
        for text in ["0", "s", "2*s^0.5 + 3*s^1.5", "0.1*exp(2*s)", "exp(s)", "s^2/3"] {
            let f = parse_family(text).unwrap();
            assert_eq!(parse_family(&family_text(&f)).unwrap(), f, "{text}");
        }
        assert_eq!(parse_family("s^2/3").unwrap(), ScalarFamily::monomial(1.0, 2.0 / 3.0));
        assert!(parse_family("1 + s").is_err());
    }

    #[test]
    fn unknown_key_names_the_line() {
        let text = format!("{MINIMAL}bogus = 1\n");
        match parse_config(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 18);
                assert!(message.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn focusing_rejects_pseudoconformal() {
        let text = MINIMAL.replace("sign = defocusing", "sign = focusing") + "[analyses]\nenabled = pseudoconformal\n";
        assert!(matches!(parse_config(&text), Err(Error::Validation(m)) if m.contains("pseudoconformal")));
    }

    #[test]
    fn preset_then_override() {
        let s = parse_config("preset = ex41\nid = mine\n[solver]\nt_end = 2\n").unwrap();
        assert_eq!(s.id, "mine");
        assert_eq!(s.solver.t_end, 2.0);
        assert_eq!(s.model, presets::preset("ex41").unwrap().model);
    }

    #[test]
    fn canonical_text_round_trips() {
        for name in presets::PRESETS {
            let s = presets::preset(name).unwrap();
            assert_eq!(parse_config(&s.to_config_text()).unwrap(), s, "{name}");
        }
    }

    #[test]
    fn bubble_needs_high_dimension() {
        let text = MINIMAL.replace("family = chirped_gaussian", "family = bubble");
        assert!(matches!(parse_config(&text), Err(Error::Validation(_))));
    }
}

//! Runs a scenario: criteria first, then the simulation, then the requested
//! analyses. Writes `<id>.series.csv` and `<id>.summary.json`, plus the
//! wall-clock times in `<id>.timings.json` so that the first two stay
//! byte-identical across repeated runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::criteria::{self, num, CaseClass, CriteriaReport, MorawetzConstants, MorawetzParams};
use crate::diagnostics::{
    decay_fit, diagnose_with, morawetz_accumulate, pseudoconformal_residual_with, spacetime_norms, verify_virial,
    DiagnoseOptions, DiagnosticsRecord, SpatialWeight, ThetaForm, WeightSpec,
};
use crate::dynamics::{run_with, RunOutcome, RunStatus};
use crate::error::{Error, Result};
use crate::nonlinearity::CriticalSign;

use super::config::{parse_config, Scenario};

/// Relative tolerance applied when comparing a computed quantity with its
/// closed-form bound, to absorb rounding in the quadratures.
const ROUNDING: f64 = 1e-12;

/// One checked inequality `computed_lhs <= paper_rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub name: String,
    pub computed_lhs: f64,
    pub paper_rhs: f64,
    pub satisfied: bool,
    /// Rows that only inform do not affect the exit code.
    pub asserted: bool,
    /// Time of the worst record for pointwise rows.
    pub worst_t: Option<f64>,
}

impl BoundRow {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            computed_lhs: lhs,
            paper_rhs: rhs,
            satisfied: lhs <= rhs * (1.0 + ROUNDING) + f64::MIN_POSITIVE,
            asserted: true,
            worst_t: None,
        }
    }

    fn to_json(&self) -> Value {
        let mut o = Map::new();
        o.insert("name".into(), json!(self.name));
        o.insert("computed_lhs".into(), num(self.computed_lhs));
        o.insert("paper_rhs".into(), num(self.paper_rhs));
        o.insert("satisfied".into(), json!(self.satisfied));
        o.insert("asserted".into(), json!(self.asserted));
        if let Some(t) = self.worst_t {
            o.insert("worst_t".into(), num(t));
        }
        Value::Object(o)
    }
}

/// Conservation and identity defects of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drift {
    pub mass: f64,
    pub energy: f64,
    pub virial_defect: Option<f64>,
    pub virial_scale: Option<f64>,
    /// `max |R(t)| / P(0)` with the stated and the phase-exact `θ`.
    pub pseudoconformal_stated: Option<f64>,
    pub pseudoconformal_corrected: Option<f64>,
    pub gradient_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub criteria_s: f64,
    pub simulation_s: f64,
    pub analyses_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: Scenario,
    pub criteria: Option<CriteriaReport>,
    pub outcome: RunOutcome,
    pub residual: Option<Vec<f64>>,
    pub bounds: Vec<BoundRow>,
    pub drift: Drift,
    pub decay_slope: Option<f64>,
    pub timings: Timings,
    pub notes: Vec<String>,
}

impl RunReport {
    /// True when no asserted inequality failed and the stepper never broke
    /// down.
    pub fn success(&self) -> bool {
        !matches!(self.outcome.status, RunStatus::IterationFailure { .. })
            && self.bounds.iter().all(|b| b.satisfied || !b.asserted)
    }

    pub fn exit_code(&self) -> i32 {
        if self.success() {
            0
        } else {
            1
        }
    }

    pub fn series(&self) -> &[DiagnosticsRecord] {
        &self.outcome.series
    }

    pub fn bound(&self, name: &str) -> Option<&BoundRow> {
        self.bounds.iter().find(|b| b.name == name)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("t,mass,energy,J,y,grad_u_sq,grad_h_sq,g1_int,g2_int,hcrit_int,psi_int,theta,P,residual\n");
        for (i, r) in self.outcome.series.iter().enumerate() {
            let res = self.residual.as_ref().map(|v| v[i]).unwrap_or(f64::NAN);
            let vals = [
                r.t,
                r.mass,
                r.energy,
                r.variance,
                r.momentum,
                r.grad_u_sq,
                r.grad_h_sq,
                r.g1_int,
                r.g2_int,
                r.hcrit_int,
                r.psi_int,
                r.theta,
                r.pseudo_p,
                res,
            ];
            let row: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn summary_json(&self) -> Value {
        let o = &self.outcome;
        let mut status = Map::new();
        status.insert("label".into(), json!(o.status.label()));
        match o.status {
            RunStatus::BlowupDetected { t_star, trigger } => {
                status.insert("t_star".into(), num(t_star));
                status.insert("trigger".into(), json!(format!("{trigger:?}").to_lowercase()));
            }
            RunStatus::IterationFailure { t } => {
                status.insert("t".into(), num(t));
            }
            RunStatus::Completed => {}
        }
        status.insert("domain_warning".into(), o.domain_warning.map(num).unwrap_or(Value::Null));
        status.insert("success".into(), json!(self.success()));
        status.insert("notes".into(), json!(self.notes));
        let d = &self.drift;
        let opt = |x: Option<f64>| x.map(num).unwrap_or(Value::Null);
        json!({
            "scenario_id": self.scenario.id,
            "status": Value::Object(status),
            "criteria": self.criteria.as_ref().map(|c| c.to_json()).unwrap_or(Value::Null),
            "bounds": self.bounds.iter().map(|b| b.to_json()).collect::<Vec<_>>(),
            "drift": {
                "mass": num(d.mass),
                "energy": num(d.energy),
                "virial_defect": opt(d.virial_defect),
                "virial_scale": opt(d.virial_scale),
                "pseudoconformal_stated": opt(d.pseudoconformal_stated),
                "pseudoconformal_corrected": opt(d.pseudoconformal_corrected),
                "gradient_ratio": num(d.gradient_ratio),
                "decay_slope": opt(self.decay_slope),
            },
            "timings": {
                "accepted_steps": o.accepted_steps,
                "halvings": o.halvings,
                "newton_iterations": o.newton_iterations,
                "records": o.series.len(),
                "final_dt": num(o.final_dt),
                "wall_clock": "see <id>.timings.json",
            },
        })
    }

    pub fn timings_json(&self) -> Value {
        let t = &self.timings;
        json!({
            "criteria_s": num(t.criteria_s),
            "simulation_s": num(t.simulation_s),
            "analyses_s": num(t.analyses_s),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let id = &self.scenario.id;
        fs::write(dir.join(format!("{id}.series.csv")), self.csv())?;
        let pretty = |v: &Value| serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()));
        fs::write(dir.join(format!("{id}.summary.json")), pretty(&self.summary_json())? + "\n")?;
        fs::write(dir.join(format!("{id}.timings.json")), pretty(&self.timings_json())? + "\n")?;
        Ok(())
    }
}

fn diagnose_options(s: &Scenario) -> DiagnoseOptions {
    DiagnoseOptions {
        reference_energy: None,
        psi_weight: s.analyses.morawetz.map(|p| SpatialWeight { theta: p.theta, sigma: p.sigma }),
        g1_power: s.analyses.spacetime.map(|p| p.r).filter(|&r| r != 1.0),
    }
}

/// Criteria report for a scenario at its initial data.
pub fn check_scenario(s: &Scenario) -> Result<CriteriaReport> {
    let u0 = s.initial_field()?;
    let rec = diagnose_with(&u0, &s.model, 0.0, &diagnose_options(s))?;
    criteria::evaluate(&s.model, &rec, &s.analyses.morawetz.unwrap_or_default(), s.analyses.spacetime)
}

pub fn run_scenario(s: &Scenario) -> Result<RunReport> {
    s.validate()?;
    let opts = diagnose_options(s);
    let u0 = s.initial_field()?;

    let clock = Instant::now();
    let rec0 = diagnose_with(&u0, &s.model, 0.0, &opts)?;
    let wants_criteria = s.analyses.criteria
        || s.analyses.morawetz.is_some()
        || s.analyses.spacetime.is_some()
        || s.analyses.decay.is_some();
    let criteria = if wants_criteria {
        let params = s.analyses.morawetz.unwrap_or_default();
        Some(criteria::evaluate(&s.model, &rec0, &params, s.analyses.spacetime)?)
    } else {
        None
    };
    let criteria_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let outcome = run_with(&u0, &s.model, &s.solver, &opts);
    let simulation_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut report = RunReport {
        scenario: s.clone(),
        criteria,
        outcome,
        residual: None,
        bounds: Vec::new(),
        drift: Drift::default(),
        decay_slope: None,
        timings: Timings { criteria_s, simulation_s, analyses_s: 0.0 },
        notes: Vec::new(),
    };
    analyse(&mut report)?;
    report.timings.analyses_s = clock.elapsed().as_secs_f64();
    Ok(report)
}

fn max_rel(series: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    let Some(first) = series.first() else { return 0.0 };
    let f0 = f(first);
    let scale = if f0 != 0.0 { f0.abs() } else { 1.0 };
    series.iter().map(|r| (f(r) - f0).abs() / scale).fold(0.0, f64::max)
}

fn analyse(rep: &mut RunReport) -> Result<()> {
    let s = rep.scenario.clone();
    let series = rep.outcome.series.clone();
    let first = series.first().cloned().ok_or(Error::InsufficientSeries { needed: 1, got: 0 })?;

    rep.drift.mass = max_rel(&series, |r| r.mass);
    rep.drift.energy = max_rel(&series, |r| r.energy);
    let sup01 = series.iter().filter(|r| r.t <= 1.0).map(|r| r.blowup_functional()).fold(0.0, f64::max);
    let sup = series.iter().map(|r| r.blowup_functional()).fold(0.0, f64::max);
    rep.drift.gradient_ratio = if sup01 > 0.0 { sup / sup01 } else { 0.0 };

    if s.model.sign != CriticalSign::Focusing {
        let stated = pseudoconformal_residual_with(&series, &s.model, ThetaForm::Stated)?;
        let corrected = pseudoconformal_residual_with(&series, &s.model, ThetaForm::Corrected)?;
        let scale = if first.pseudo_p != 0.0 { first.pseudo_p.abs() } else { 1.0 };
        if s.analyses.pseudoconformal {
            let worst = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale;
            rep.drift.pseudoconformal_stated = Some(worst(&stated));
            rep.drift.pseudoconformal_corrected = Some(worst(&corrected));
        }
        rep.residual = Some(stated);
    }
    if s.analyses.virial && series.len() >= 3 {
        let v = verify_virial(&series, 1e-3)?;
        rep.drift.virial_defect = Some(v.virial_defect);
        rep.drift.virial_scale = Some(v.virial_scale);
    }

    let Some(crit) = rep.criteria.clone() else { return Ok(()) };

    if let Some(bound) = crit.blowup_time_bound() {
        let t_star = match rep.outcome.status {
            RunStatus::BlowupDetected { t_star, .. } => t_star,
            _ => f64::INFINITY,
        };
        rep.bounds.push(BoundRow::new("blowup_time", t_star, bound));
    }

    if let Ok(mr) = &crit.mr {
        // ∫|G1| <= M_r ∫|∇h|^2 along the whole run.
        let mut row = BoundRow::new("g1_vs_mr", 0.0, 0.0);
        let mut worst = f64::NEG_INFINITY;
        for r in &series {
            let gap = r.g1_abs_int - mr.mr * r.grad_h_sq;
            if gap > worst {
                worst = gap;
                row = BoundRow::new("g1_vs_mr", r.g1_abs_int, mr.mr * r.grad_h_sq);
                row.worst_t = Some(r.t);
            }
        }
        if !series.is_empty() {
            rep.bounds.push(row);
        }
    }

    if s.analyses.morawetz.is_some() || s.analyses.decay.is_some() {
        match (&crit.morawetz, crit.mr_value()) {
            (Ok(k), Some(m)) => morawetz_rows(rep, &series, &crit, k, m)?,
            (Err(e), _) => rep.notes.push(format!("Morawetz bounds unavailable: {e}")),
            _ => {}
        }
    }

    if let Some(t_min) = s.analyses.decay {
        match decay_fit(&series, t_min) {
            Ok(slope) => rep.decay_slope = Some(slope),
            Err(e) => rep.notes.push(format!("decay fit unavailable: {e}")),
        }
    }

    if let Some(sp) = s.analyses.spacetime {
        match &crit.spacetime {
            Some(Ok(b)) => {
                let (h, i) = spacetime_norms(&series, &rep.outcome.checkpoints, &s.model, sp.p, sp.q, sp.r)?;
                rep.bounds.push(BoundRow::new("spacetime_h", h, b.h_bound));
                rep.bounds.push(BoundRow::new("spacetime_i", i, b.i_bound));
            }
            Some(Err(e)) => rep.notes.push(format!("spacetime bounds unavailable: {e}")),
            None => {}
        }
    }
    Ok(())
}

fn morawetz_rows(
    rep: &mut RunReport,
    series: &[DiagnosticsRecord],
    crit: &CriteriaReport,
    k: &MorawetzConstants,
    mr: f64,
) -> Result<()> {
    let params: MorawetzParams = crit.morawetz_params;
    let e0 = series[0].energy;
    let c = k.c_u0;
    match crit.classification.class {
        CaseClass::Case1 => {
            // t^2 ∫Ψ <= C1 for t >= 1.
            let mut row: Option<BoundRow> = None;
            for r in series.iter().filter(|r| r.t >= 1.0) {
                let lhs = r.t * r.t * r.psi_int;
                if row.as_ref().map(|b| lhs > b.computed_lhs).unwrap_or(true) {
                    let mut b = BoundRow::new("decay_pointwise", lhs, k.c1);
                    b.worst_t = Some(r.t);
                    row = Some(b);
                }
            }
            if let Some(b) = row {
                rep.bounds.push(b);
            }
            // ∫Ψ <= 2E(1+M_r)/(1-M_r) at every record.
            let ratio = (1.0 + mr) / (1.0 - mr);
            let worst = series.iter().map(|r| r.psi_int).fold(0.0, f64::max);
            rep.bounds.push(BoundRow::new("psi_uniform", worst, 2.0 * e0 * ratio));
            if rep.scenario.analyses.morawetz.is_some() {
                if let Some(m1) = k.m1 {
                    let sw = SpatialWeight { theta: params.theta, sigma: params.sigma };
                    let lhs = morawetz_accumulate(series, WeightSpec::SpatialProfile(sw))?;
                    rep.bounds.push(BoundRow::new("estimate_m1", lhs, m1));
                }
                if let Some(m2) = k.m2 {
                    let lhs = morawetz_accumulate(series, WeightSpec::PowerOfT { mu: 2.0 - params.mu })?;
                    rep.bounds.push(BoundRow::new("estimate_m2", lhs, m2));
                }
                if let Some(m3) = k.m3 {
                    rep.bounds.push(BoundRow::new("estimate_m3", morawetz_accumulate(series, WeightSpec::Unit)?, m3));
                }
            }
        }
        CaseClass::Case2 { l } => {
            let lam = l * (1.0 + mr) / (1.0 - mr);
            let kk = 4.0 * l * e0 * (1.0 + mr).powi(2) + c * (1.0 - mr);
            let mut row: Option<BoundRow> = None;
            for r in series.iter().filter(|r| r.t >= 1.0) {
                let rhs = (1.0 + mr) / (4.0 * (1.0 - mr)) * (c / (r.t * r.t) + kk / ((1.0 - mr) * r.t.powf(2.0 - lam)));
                let ratio = r.psi_int / rhs;
                if row.as_ref().map(|b| ratio > b.computed_lhs / b.paper_rhs).unwrap_or(true) {
                    let mut b = BoundRow::new("decay_pointwise", r.psi_int, rhs);
                    b.worst_t = Some(r.t);
                    row = Some(b);
                }
            }
            if let Some(b) = row {
                rep.bounds.push(b);
            }
            if rep.scenario.analyses.morawetz.is_some() {
                if let Some(m4) = k.m4 {
                    let lhs = morawetz_accumulate(series, WeightSpec::PowerOfT { mu: 2.0 - params.mu })?;
                    rep.bounds.push(BoundRow::new("estimate_m4", lhs, m4));
                }
                if let Some(m5) = k.m5 {
                    rep.bounds.push(BoundRow::new("estimate_m5", morawetz_accumulate(series, WeightSpec::Unit)?, m5));
                }
            }
        }
        CaseClass::Neither => {}
    }
    Ok(())
}

/// Runs every `*.cfg` file of `dir` on a pool of `jobs` workers, writing each
/// scenario's files next to its config and `sweep.index.json` once all are
/// done. Returns the number of failed scenarios.
pub fn sweep(dir: &Path, jobs: usize) -> Result<usize> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "cfg").unwrap_or(false))
        .collect();
    files.sort();
    let scenarios: Vec<(PathBuf, Result<Scenario>)> =
        files.into_iter().map(|p| { let s = fs::read_to_string(&p).map_err(Error::from).and_then(|t| parse_config(&t)); (p, s) }).collect();
    let mut seen = std::collections::BTreeSet::new();
    for (p, s) in &scenarios {
        if let Ok(s) = s {
            if !seen.insert(s.id.clone()) {
                return Err(Error::Validation(format!("duplicate scenario id {:?} in {}", s.id, p.display())));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let results: Vec<Value> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|(path, s)| {
                let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
                let outcome = s
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|s| run_scenario(s).map_err(|e| e.to_string()))
                    .and_then(|r| r.write(dir).map(|_| r).map_err(|e| e.to_string()));
                match outcome {
                    Ok(r) => json!({
                        "config": file,
                        "scenario_id": r.scenario.id,
                        "status": r.outcome.status.label(),
                        "exit_code": r.exit_code(),
                    }),
                    Err(e) => json!({ "config": file, "error": e, "exit_code": 2 }),
                }
            })
            .collect()
    });
    let failed = results.iter().filter(|v| v["exit_code"] != json!(0)).count();
    let index = json!({ "scenarios": results, "failed": failed });
    let text = serde_json::to_string_pretty(&index).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("sweep.index.json"), text + "\n")?;
    Ok(failed)
}

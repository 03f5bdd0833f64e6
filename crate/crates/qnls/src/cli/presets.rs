//! Built-in scenarios, one per worked example.

use crate::criteria::{MorawetzParams, SpacetimeParams};
use crate::dynamics::SolverConfig;
use crate::nonlinearity::{CriticalSign, NonlinearityModel, ScalarFamily, Term};

use super::config::{Analyses, GridSpec, InitialData, Scenario};

pub const PRESETS: [&str; 9] = ["ex31A", "ex31B", "ex32", "ex33", "ex41", "ex42", "ex51", "ex52", "ex53"];

fn mono(c: f64, p: f64) -> ScalarFamily {
    ScalarFamily::monomial(c, p)
}

fn sum(terms: &[(f64, f64)]) -> ScalarFamily {
    ScalarFamily::PowerSum(terms.iter().map(|&(c, p)| Term::new(c, p)).collect())
}

fn gaussian(amplitude: f64, width: f64) -> InitialData {
    InitialData::ChirpedGaussian { amplitude, width, chirp: 0.0 }
}

fn solver(t_end: f64) -> SolverConfig {
    SolverConfig { dt: 5e-4, t_end, output_stride: 20, ..SolverConfig::default() }
}

fn defocusing(h: ScalarFamily, f1: ScalarFamily, f2: ScalarFamily, a: f64) -> NonlinearityModel {
    NonlinearityModel::new(3, h, f1, f2, a, CriticalSign::Defocusing).expect("preset model")
}

fn decay_suite() -> Analyses {
    Analyses {
        virial: true,
        pseudoconformal: true,
        morawetz: Some(MorawetzParams::default()),
        spacetime: None,
        decay: Some(1.0),
        criteria: true,
    }
}

const WIDE: GridSpec = GridSpec { r_max: 80.0, nodes: 4096 };

pub fn preset(name: &str) -> Option<Scenario> {
    let third = 1.0 / 3.0;
    let s = match name {
        // h = s^α with α = 1 and a source F = s^q, 0 < q < α 2* - 1.
        "ex31A" => Scenario {
            id: name.into(),
            model: defocusing(mono(1.0, 1.0), mono(1.0, 1.0), ScalarFamily::Zero, 2.0),
            grid: WIDE,
            initial: gaussian(0.6, 3.0),
            solver: solver(10.0),
            analyses: Analyses { virial: true, pseudoconformal: true, criteria: true, ..Analyses::default() },
        },
        // Same model with the focusing critical term and a positive chirp, which
        // makes y(0) > 0. The collapse happens near the origin, so a short
        // domain buys the resolution.
        "ex31B" => Scenario {
            id: name.into(),
            model: NonlinearityModel::new(3, mono(1.0, 1.0), mono(1.0, 1.0), ScalarFamily::Zero, 2.0, CriticalSign::Focusing)
                .expect("preset model"),
            grid: GridSpec { r_max: 3.0, nodes: 4096 },
            initial: InitialData::ChirpedGaussian { amplitude: 2.0, width: 1.0, chirp: 0.5 },
            solver: SolverConfig { dt: 1e-5, t_end: 0.3, blowup_factor: 1e3, output_stride: 50, ..SolverConfig::default() },
            analyses: Analyses { virial: true, criteria: true, ..Analyses::default() },
        },
        // Power sums for h and for both parts of F.
        "ex32" => Scenario {
            id: name.into(),
            model: defocusing(sum(&[(1.0, 0.5), (1.0, 1.0)]), sum(&[(1.0, 2.0 * third), (1.0, 1.0)]), mono(1.0, 0.5), 1.0),
            grid: WIDE,
            initial: gaussian(0.5, 3.0),
            // Mixed powers with s^(1/2) are not smooth where the dispersed
            // tail nearly vanishes; a larger shift keeps Newton converging.
            solver: SolverConfig { density_shift: 1e-10, ..solver(5.0) },
            analyses: Analyses { virial: true, pseudoconformal: true, criteria: true, ..Analyses::default() },
        },
        // h = e^{Ks}, F = a e^{Ls} with L < K 2* and a/L < A/2*.
        "ex33" => Scenario {
            id: name.into(),
            model: defocusing(
                ScalarFamily::Exponential { coeff: 1.0, rate: 1.0 },
                ScalarFamily::Exponential { coeff: 0.1, rate: 1.0 },
                ScalarFamily::Zero,
                1.0,
            ),
            grid: WIDE,
            initial: gaussian(0.5, 3.0),
            solver: solver(10.0),
            analyses: Analyses { virial: true, criteria: true, ..Analyses::default() },
        },
        // h = s^α, F = s^{2α-1+2/N} - s^q at α = 1/2, q = 1 >= 2/N.
        "ex41" => Scenario {
            id: name.into(),
            model: defocusing(mono(1.0, 0.5), mono(1.0, 2.0 * third), mono(1.0, 1.0), 1.0),
            grid: WIDE,
            initial: gaussian(0.25, 3.0),
            solver: solver(20.0),
            analyses: decay_suite(),
        },
        // h = s^{α1} + s^{α2} with the source spanning both critical powers.
        "ex42" => Scenario {
            id: name.into(),
            model: defocusing(
                sum(&[(1.0, 0.5), (1.0, 1.0)]),
                sum(&[(1.0, 2.0 * third), (1.0, 1.2), (1.0, 5.0 * third)]),
                ScalarFamily::Zero,
                1.0,
            ),
            grid: WIDE,
            initial: gaussian(0.25, 3.0),
            solver: SolverConfig { density_shift: 1e-10, ..solver(5.0) },
            analyses: Analyses { virial: true, pseudoconformal: true, criteria: true, ..Analyses::default() },
        },
        // Purely absorbing F = -s^q.
        "ex51" => Scenario {
            id: name.into(),
            model: defocusing(mono(1.0, 1.0), ScalarFamily::Zero, mono(1.0, 1.0), 1.0),
            grid: WIDE,
            initial: gaussian(0.5, 3.0),
            solver: solver(10.0),
            analyses: decay_suite(),
        },
        // h = s^α, F = s^{2α-1+2/N} at α = 1/2.
        "ex52" => Scenario {
            id: name.into(),
            model: defocusing(mono(1.0, 0.5), mono(1.0, 2.0 * third), ScalarFamily::Zero, 1.0),
            grid: WIDE,
            initial: gaussian(0.25, 3.0),
            solver: solver(10.0),
            analyses: Analyses {
                spacetime: Some(SpacetimeParams { p: 1.0, q: 1.0, r: 1.0 }),
                ..decay_suite()
            },
        },
        // Power sums whose extreme source powers are the two critical ones.
        "ex53" => Scenario {
            id: name.into(),
            model: defocusing(
                sum(&[(1.0, 0.5), (1.0, 0.75)]),
                sum(&[(1.0, 2.0 * third), (1.0, 7.0 / 6.0)]),
                mono(1.0, 1.0),
                1.0,
            ),
            grid: WIDE,
            initial: gaussian(0.25, 3.0),
            solver: SolverConfig { density_shift: 1e-10, ..solver(5.0) },
            analyses: Analyses { virial: true, pseudoconformal: true, criteria: true, ..Analyses::default() },
        },
        _ => return None,
    };
    Some(s)
}

//! Experiment configurations. Each experiment has its own schema; unknown
//! fields are rejected. Defaults for tolerances match the acceptance
//! thresholds of the test suite.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use capdual_core::repr::{parse_rational, rationalize, Rational, WeightVector, WeightedVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Duality,
    Prefactor,
    PermDual,
    SchurWeylLdp,
    DuffieldLdp,
    McCheck,
    Capacity,
    Laurent,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Duality,
        ExperimentKind::Prefactor,
        ExperimentKind::PermDual,
        ExperimentKind::SchurWeylLdp,
        ExperimentKind::DuffieldLdp,
        ExperimentKind::McCheck,
        ExperimentKind::Capacity,
        ExperimentKind::Laurent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Duality => "duality",
            ExperimentKind::Prefactor => "prefactor",
            ExperimentKind::PermDual => "perm-dual",
            ExperimentKind::SchurWeylLdp => "schur-weyl-ldp",
            ExperimentKind::DuffieldLdp => "duffield-ldp",
            ExperimentKind::McCheck => "mc-check",
            ExperimentKind::Capacity => "capacity",
            ExperimentKind::Laurent => "laurent",
        }
    }
}

/// A rational given as `"p/q"`, a decimal string, an integer, or a float
/// (rationalized to within 1e-9).
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    pub fn to_rational(&self) -> Result<Rational> {
        Ok(match self {
            Num::Int(i) => Rational::from_integer((*i).into()),
            Num::Float(x) => rationalize(*x, 1e-9)?,
            Num::Text(s) => parse_rational(s)?,
        })
    }

    pub fn to_f64(&self) -> Result<f64> {
        Ok(match self {
            Num::Int(i) => *i as f64,
            Num::Float(x) => *x,
            Num::Text(s) => capdual_core::repr::rational::to_f64(&parse_rational(s)?),
        })
    }
}

pub fn rationals(xs: &[Num]) -> Result<Vec<Rational>> {
    xs.iter().map(Num::to_rational).collect()
}

/// A complex amplitude: a real number or `[re, im]`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn value(&self) -> Complex64 {
        match self {
            Amplitude::Real(x) => Complex64::new(*x, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(*re, *im),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VectorSpec {
    pub weights: Vec<Vec<i64>>,
    pub amplitudes: Vec<Amplitude>,
}

impl VectorSpec {
    pub fn build(&self) -> Result<WeightedVector> {
        if self.weights.len() != self.amplitudes.len() {
            bail!(
                "{} weights but {} amplitudes",
                self.weights.len(),
                self.amplitudes.len()
            );
        }
        let n = self.weights.first().map(Vec::len).ok_or_else(|| anyhow!("no weights given"))?;
        let terms = self
            .weights
            .iter()
            .zip(&self.amplitudes)
            .map(|(w, a)| Ok((WeightVector::new(w.clone())?, a.value())))
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightedVector::new(n, terms)?)
    }
}

/// Fields shared by every experiment.
#[derive(Clone, Debug)]
pub struct Common {
    pub experiment: ExperimentKind,
    pub seed: Option<u64>,
    /// Output directory; `--out` takes precedence.
    pub out: Option<PathBuf>,
}

macro_rules! experiment_config {
    ($(#[$meta:meta])* $name:ident { $($body:tt)* }) => {
        $(#[$meta])*
        #[derive(Clone, Debug, Deserialize, Serialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            pub experiment: ExperimentKind,
            #[serde(default)]
            pub seed: Option<u64>,
            #[serde(default)]
            pub out: Option<PathBuf>,
            $($body)*
        }
    };
}

fn default_tolerances<T: Default>() -> T {
    T::default()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualityTolerances {
    /// Lower bound on `‖Π_k v^⊗k‖^{1/k} / cap_θ` at the last reported `k`.
    pub min_ratio: f64,
    /// Largest allowed negative gap (weak duality).
    pub weak_duality_slack: f64,
}

impl Default for DualityTolerances {
    fn default() -> Self {
        DualityTolerances {
            min_ratio: 0.985,
            weak_duality_slack: 1e-10,
        }
    }
}

experiment_config!(DualityConfig {
    pub vector: VectorSpec,
    pub theta: Vec<Num>,
    pub k_max: usize,
    #[serde(default = "default_tolerances")]
    pub tolerances: DualityTolerances,
});

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrefactorTolerances {
    /// Expected limit of the sequence, checked at the last row.
    pub target: Option<f64>,
    pub target_tolerance: f64,
    /// Rows with `k` at least this are checked for relative spread.
    pub cauchy_from: Option<u64>,
    pub cauchy_relative: f64,
}

impl Default for PrefactorTolerances {
    fn default() -> Self {
        PrefactorTolerances {
            target: None,
            target_tolerance: 1e-3,
            cauchy_from: None,
            cauchy_relative: 0.01,
        }
    }
}

experiment_config!(PrefactorConfig {
    pub vector: VectorSpec,
    /// Run the dense DP up to `k_max`.
    #[serde(default)]
    pub k_max: Option<usize>,
    /// Evaluate only these `k` by torus quadrature instead.
    #[serde(default)]
    pub ks: Option<Vec<u64>>,
    #[serde(default = "default_tolerances")]
    pub tolerances: PrefactorTolerances,
});

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PermTolerances {
    /// Allowed excess of `(k!·perm)^{1/k}` over `cap²` (log scale).
    pub slack: f64,
    /// Optional window for the value `(k!·perm)^{1/k}` at the last row.
    pub final_window: Option<[f64; 2]>,
}

impl Default for PermTolerances {
    fn default() -> Self {
        PermTolerances {
            slack: 1e-9,
            final_window: None,
        }
    }
}

experiment_config!(PermDualConfig {
    /// Row-major, entries as rationals.
    pub matrix: Vec<Vec<Num>>,
    pub r: Vec<Num>,
    pub c: Vec<Num>,
    pub k_max: u64,
    #[serde(default = "default_tolerances")]
    pub tolerances: PermTolerances,
});

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdpTolerances {
    /// `(k, bound)` pairs: `|empirical − analytic rate| ≤ bound` at `k`.
    pub checkpoints: Vec<(u64, f64)>,
    /// The deviation must strictly decrease across the checkpoints.
    pub decreasing: bool,
}

impl LdpTolerances {
    fn schur_weyl() -> Self {
        LdpTolerances {
            checkpoints: vec![(100, 0.15), (400, 0.05)],
            decreasing: true,
        }
    }

    fn duffield() -> Self {
        LdpTolerances {
            checkpoints: vec![(200, 0.05)],
            decreasing: false,
        }
    }
}

impl Default for LdpTolerances {
    fn default() -> Self {
        LdpTolerances {
            checkpoints: Vec::new(),
            decreasing: false,
        }
    }
}

experiment_config!(SchurWeylConfig {
    /// Spectrum, sorted decreasingly.
    pub q: Vec<f64>,
    pub theta: Vec<Num>,
    pub k_max: u64,
    #[serde(default = "LdpTolerances::schur_weyl")]
    pub tolerances: LdpTolerances,
});

experiment_config!(DuffieldConfig {
    /// Weight multiset of the SU(2)-representation; `[1, -1]` is `C²`.
    pub weights: Vec<i64>,
    pub theta: Num,
    pub k_max: u64,
    #[serde(default = "LdpTolerances::duffield")]
    pub tolerances: LdpTolerances,
});

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ActionSpec {
    Torus { weights: Vec<Vec<i64>>, amplitudes: Vec<Amplitude> },
    U2Vector { vector: [Amplitude; 2] },
    Su2Vector { vector: [Amplitude; 2] },
    U2LeftMatrix { matrix: [[Amplitude; 2]; 2] },
    Su2LeftMatrix { matrix: [[Amplitude; 2]; 2] },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct McCase {
    pub action: ActionSpec,
    pub k: u32,
    /// A weight for torus actions, a partition `[λ₁, λ₂]` otherwise.
    pub lambda: Vec<i64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct McTolerances {
    pub sigmas: f64,
    pub min_fraction: f64,
}

impl Default for McTolerances {
    fn default() -> Self {
        McTolerances {
            sigmas: 4.0,
            min_fraction: 0.95,
        }
    }
}

fn default_samples() -> u64 {
    1_000_000
}

experiment_config!(McConfig {
    pub cases: Vec<McCase>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_tolerances")]
    pub tolerances: McTolerances,
});

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacityTolerances {
    /// Agreement of the Newton and KL routes in log scale.
    pub solver_agreement: f64,
}

impl Default for CapacityTolerances {
    fn default() -> Self {
        CapacityTolerances { solver_agreement: 1e-8 }
    }
}

experiment_config!(CapacityConfig {
    pub vector: VectorSpec,
    pub theta: Vec<Num>,
    #[serde(default = "default_tolerances")]
    pub tolerances: CapacityTolerances,
});

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaurentTolerances {
    /// `(k, lo, hi)`: require `|cst(f^k)|^{1/k} ∈ [lo, hi]`.
    pub growth: Option<(u32, f64, f64)>,
    /// Compare the positive-real critical value with this `cap²`.
    pub cap_sq: Option<f64>,
    pub cap_sq_tolerance: f64,
}

impl Default for LaurentTolerances {
    fn default() -> Self {
        LaurentTolerances {
            growth: None,
            cap_sq: None,
            cap_sq_tolerance: 1e-9,
        }
    }
}

/// A Laurent term `[exponent, re]` or `[exponent, re, im]`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Term {
    Real(i64, Num),
    Complex(i64, f64, f64),
}

experiment_config!(LaurentConfig {
    pub terms: Vec<Term>,
    pub k_max: u32,
    #[serde(default = "default_tolerances")]
    pub tolerances: LaurentTolerances,
});

#[derive(Clone, Debug)]
pub enum Experiment {
    Duality(DualityConfig),
    Prefactor(PrefactorConfig),
    PermDual(PermDualConfig),
    SchurWeylLdp(SchurWeylConfig),
    DuffieldLdp(DuffieldConfig),
    McCheck(McConfig),
    Capacity(CapacityConfig),
    Laurent(LaurentConfig),
}

#[derive(Deserialize)]
struct Probe {
    experiment: ExperimentKind,
}

/// Parses a config; errors carry the line and column of the offending
/// token.
pub fn parse(text: &str, source: &str) -> Result<(Experiment, Common)> {
    let at = |e: serde_json::Error| anyhow!("{source}: {e}");
    let probe: Probe = serde_json::from_str(text).map_err(at)?;
    fn typed<T: serde::de::DeserializeOwned>(text: &str) -> serde_json::Result<T> {
        serde_json::from_str(text)
    }
    let experiment = match probe.experiment {
        ExperimentKind::Duality => Experiment::Duality(typed(text).map_err(at)?),
        ExperimentKind::Prefactor => Experiment::Prefactor(typed(text).map_err(at)?),
        ExperimentKind::PermDual => Experiment::PermDual(typed(text).map_err(at)?),
        ExperimentKind::SchurWeylLdp => Experiment::SchurWeylLdp(typed(text).map_err(at)?),
        ExperimentKind::DuffieldLdp => Experiment::DuffieldLdp(typed(text).map_err(at)?),
        ExperimentKind::McCheck => Experiment::McCheck(typed(text).map_err(at)?),
        ExperimentKind::Capacity => Experiment::Capacity(typed(text).map_err(at)?),
        ExperimentKind::Laurent => Experiment::Laurent(typed(text).map_err(at)?),
    };
    let common = experiment.common();
    Ok((experiment, common))
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        self.common().experiment
    }

    pub fn common(&self) -> Common {
        macro_rules! common {
            ($c:expr) => {
                Common {
                    experiment: $c.experiment,
                    seed: $c.seed,
                    out: $c.out.clone(),
                }
            };
        }
        match self {
            Experiment::Duality(c) => common!(c),
            Experiment::Prefactor(c) => common!(c),
            Experiment::PermDual(c) => common!(c),
            Experiment::SchurWeylLdp(c) => common!(c),
            Experiment::DuffieldLdp(c) => common!(c),
            Experiment::McCheck(c) => common!(c),
            Experiment::Capacity(c) => common!(c),
            Experiment::Laurent(c) => common!(c),
        }
    }

    /// The config as JSON, echoed into the summary.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Experiment::Duality(c) => serde_json::to_value(c),
            Experiment::Prefactor(c) => serde_json::to_value(c),
            Experiment::PermDual(c) => serde_json::to_value(c),
            Experiment::SchurWeylLdp(c) => serde_json::to_value(c),
            Experiment::DuffieldLdp(c) => serde_json::to_value(c),
            Experiment::McCheck(c) => serde_json::to_value(c),
            Experiment::Capacity(c) => serde_json::to_value(c),
            Experiment::Laurent(c) => serde_json::to_value(c),
        }
        .expect("configs serialize to JSON")
    }
}

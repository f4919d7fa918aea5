//! Experiment payloads. Every field has a default, so `{}` (or a missing
//! payload) is a runnable descriptor; unknown fields are rejected.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use virlab_core::ch::{classify, CHParams, OrbitClass};
use virlab_core::discrete::{CMode, LagrangianDensityV};
use virlab_core::mv::{BodyTensor, RotationMatrix, SkewMatrix};
use virlab_core::GridConfig;

use crate::inputs::{diagonal, DiffeoInput, FieldInput, TrigSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VirCheck,
    ChEvolve,
    HopfOracle,
    MvRun,
    MvLimit,
    HsStep,
    HsSimple,
    InvarianceCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::VirCheck,
        Experiment::ChEvolve,
        Experiment::HopfOracle,
        Experiment::MvRun,
        Experiment::MvLimit,
        Experiment::HsStep,
        Experiment::HsSimple,
        Experiment::InvarianceCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::VirCheck => "vir-check",
            Experiment::ChEvolve => "ch-evolve",
            Experiment::HopfOracle => "hopf-oracle",
            Experiment::MvRun => "mv-run",
            Experiment::MvLimit => "mv-limit",
            Experiment::HsStep => "hs-step",
            Experiment::HsSimple => "hs-simple",
            Experiment::InvarianceCheck => "invariance-check",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::VirCheck => {
                "Virasoro group and algebra laws on seeded random elements: associativity, cocycle identity, \
                 bracket antisymmetry and Jacobi, metric/inertia compatibility"
            }
            Experiment::ChEvolve => "Evolve a Camassa-Holm family equation and monitor its conserved quantities",
            Experiment::HopfOracle => "Pseudo-spectral Hopf evolution against the method of characteristics",
            Experiment::MvRun => "Moser-Veselov rigid body trajectory with spectrum and orthogonality monitors",
            Experiment::MvLimit => "Convergence of the discrete rigid body to the continuous Euler-Arnold flow",
            Experiment::HsStep => "Hunter-Saxton discrete stepper through the periodic Psi equation",
            Experiment::HsSimple => "The simple discretization [sqrt(omega_k') + sqrt(rho')]' = 0",
            Experiment::InvarianceCheck => "Inverse-invariance of H for a density V",
        }
    }

    /// `(field, type, meaning)` for each payload field.
    pub fn fields(self) -> &'static [(&'static str, &'static str, &'static str)] {
        match self {
            Experiment::VirCheck => &[
                ("n", "integer", "grid size"),
                ("trials", "integer", "random triples"),
                ("modes", "integer", "harmonics of random diffeomorphisms"),
                ("amplitude", "float", "sup-norm bound of random displacements"),
                ("algebra_modes", "integer", "harmonics of random algebra fields"),
                ("group_tolerance", "float", "associativity and cocycle identity bound"),
                ("inverse_tolerance", "float", "bound on |x x^{-1} - e|"),
                ("vector_tolerance", "float", "bracket vector-part bound"),
                ("central_tolerance", "float", "bracket central-part bound"),
                ("metric_tolerance", "float", "metric/inertia compatibility bound"),
            ],
            Experiment::ChEvolve => &[
                ("params", "{alpha, beta, b}", "equation parameters"),
                ("v0", "field", "initial velocity"),
                ("dt", "float", "time step"),
                ("steps", "integer", "number of steps"),
                ("record_every", "integer", "CSV row stride"),
                ("tolerance", "float", "drift bound for momentum and energy"),
                ("residual_trials", "integer", "random fields substituted into the equation"),
                ("residual_tolerance", "float", "bound on the substitution residual"),
            ],
            Experiment::HopfOracle => &[
                ("v0", "field", "initial velocity"),
                ("fraction", "float", "final time as a fraction of the shock time"),
                ("dt", "float", "largest time step"),
                ("record_every", "integer", "CSV row stride"),
                ("tolerance", "float", "sup-error bound"),
            ],
            Experiment::MvRun => &[
                ("J", "matrix", "symmetric positive-definite inertia"),
                ("omega0", "matrix or null", "initial angular velocity; random near identity if null"),
                ("omega0_scale", "float", "size of the random initial rotation"),
                ("steps", "integer", "number of steps"),
                ("record_every", "integer", "CSV row stride"),
                ("spectrum_tolerance", "float", "bound on spectrum drift"),
                ("orthogonality_tolerance", "float", "bound on |omega^T omega - I|"),
                ("roundtrip_trials", "integer", "random (omega, J) pairs for the solve round trip"),
                ("roundtrip_max_n", "integer", "largest dimension in the round trip"),
                ("roundtrip_scale", "float", "size of the random rotations"),
                ("roundtrip_tolerance", "float", "round-trip error bound"),
            ],
            Experiment::MvLimit => &[
                ("J", "matrix", "symmetric positive-definite inertia"),
                ("M0", "matrix or null", "continuous initial momentum; random if null"),
                ("M0_scale", "float", "Frobenius norm of the random momentum"),
                ("t_final", "float", "comparison time"),
                ("eps", "float array", "discrete step scales"),
                ("dt_for_limit", "float", "RK4 reference step"),
                ("min_slope", "float", "required log-log slope"),
            ],
            Experiment::HsStep => &[
                ("stepper", "\"hs\" or null", "accepted for compatibility"),
                ("omega0", "diffeomorphism", "first discrete velocity"),
                ("Omega", "float", "conserved central velocity"),
                ("mode", "{\"fix_C\": float} or \"periodic_C\"", "integration constant"),
                ("rotation", "float", "value of the inverse of the next velocity at 0"),
                ("steps", "integer", "number of steps"),
                ("stationarity_directions", "integer", "random directions per interior point"),
                ("stationarity_tolerance", "float", "stationarity bound"),
                ("el2_tolerance", "float", "Euler-Lagrange residual bound"),
                ("omega_spread_tolerance", "float", "bound on the spread of the realized central velocities"),
                ("negative_control", "bool", "also test a bent copy of the trajectory"),
                ("negative_amplitude", "float", "size of the bend"),
                ("negative_threshold", "float", "residual the bent copy must exceed"),
            ],
            Experiment::HsSimple => &[
                ("stepper", "\"hs_simple\" or null", "accepted for compatibility"),
                ("omega0", "diffeomorphism", "first discrete velocity"),
                ("Omega", "0 or null", "the simple discretization is the Omega = 0 case"),
                ("rotation", "float", "value of the inverse of the next velocity at 0"),
                ("steps", "integer", "number of steps"),
                ("stationarity_directions", "integer", "random directions per interior point"),
                ("stationarity_tolerance", "float", "stationarity bound"),
                ("residual_tolerance", "float", "defining relation bound"),
                ("root_find_trials", "integer", "random diffeomorphisms for the constant check"),
                ("root_find_tolerance", "float", "closed form vs bisection bound"),
                ("identity_tolerance", "float", "bound on the non-rigid part of the step from the identity"),
                ("negative_control", "bool", "also test a bent copy of the trajectory"),
                ("negative_amplitude", "float", "size of the bend"),
                ("negative_threshold", "float", "residual the bent copy must exceed"),
            ],
            Experiment::InvarianceCheck => &[
                ("density", "\"sqrt\" | \"square\" | \"identity\" | \"pendulum\"", "the density V"),
                ("n", "integer", "grid size"),
                ("trials", "integer", "random elements"),
                ("expect_invariant", "bool or null", "expected verdict; null expects invariance"),
            ],
        }
    }

    pub fn default_payload(self) -> Value {
        let v = match self {
            Experiment::VirCheck => serde_json::to_value(VirCheck::default()),
            Experiment::ChEvolve => serde_json::to_value(ChEvolve::default()),
            Experiment::HopfOracle => serde_json::to_value(HopfOracle::default()),
            Experiment::MvRun => serde_json::to_value(MvRun::default()),
            Experiment::MvLimit => serde_json::to_value(MvLimit::default()),
            Experiment::HsStep => serde_json::to_value(HsStep::default()),
            Experiment::HsSimple => serde_json::to_value(HsSimple::default()),
            Experiment::InvarianceCheck => serde_json::to_value(InvarianceCheck::default()),
        };
        v.expect("defaults serialize")
    }
}

/// Collects semantic problems with a payload.
#[derive(Default)]
pub(crate) struct Problems(Vec<String>);

impl Problems {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(msg());
        }
    }
    fn positive(&mut self, name: &str, v: f64) {
        self.check(v > 0.0 && v.is_finite(), || format!("{name} must be positive, got {v}"));
    }
    fn nonzero(&mut self, name: &str, v: usize) {
        self.check(v > 0, || format!("{name} must be at least 1"));
    }
    fn grid(&mut self, name: &str, n: usize) {
        if let Err(e) = GridConfig::new(n) {
            self.0.push(format!("{name}: {e}"));
        }
    }
    fn result<T, E: std::fmt::Display>(&mut self, name: &str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.0.push(format!("{name}: {e}"));
                None
            }
        }
    }
    pub(crate) fn finish(self) -> Result<(), String> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(self.0.join("; "))
        }
    }
}

pub(crate) trait Payload {
    fn problems(&self, p: &mut Problems);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VirCheck {
    pub n: usize,
    pub trials: usize,
    pub modes: usize,
    pub amplitude: f64,
    pub algebra_modes: usize,
    pub group_tolerance: f64,
    pub inverse_tolerance: f64,
    pub vector_tolerance: f64,
    pub central_tolerance: f64,
    pub metric_tolerance: f64,
}

impl Default for VirCheck {
    fn default() -> Self {
        Self {
            n: 256,
            trials: 100,
            modes: 8,
            amplitude: 0.3,
            algebra_modes: 5,
            group_tolerance: 1e-6,
            inverse_tolerance: 1e-7,
            vector_tolerance: 1e-8,
            central_tolerance: 1e-6,
            metric_tolerance: 1e-10,
        }
    }
}

impl Payload for VirCheck {
    fn problems(&self, p: &mut Problems) {
        p.grid("n", self.n);
        p.nonzero("trials", self.trials);
        p.nonzero("modes", self.modes);
        p.nonzero("algebra_modes", self.algebra_modes);
        p.check(self.amplitude > 0.0 && self.amplitude < 0.5, || {
            format!("amplitude must lie in (0, 0.5), got {}", self.amplitude)
        });
        for (name, v) in [
            ("group_tolerance", self.group_tolerance),
            ("inverse_tolerance", self.inverse_tolerance),
            ("vector_tolerance", self.vector_tolerance),
            ("central_tolerance", self.central_tolerance),
            ("metric_tolerance", self.metric_tolerance),
        ] {
            p.positive(name, v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChEvolve {
    pub params: CHParams,
    pub v0: FieldInput,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub tolerance: f64,
    pub residual_trials: usize,
    pub residual_tolerance: f64,
}

impl Default for ChEvolve {
    fn default() -> Self {
        Self {
            params: CHParams::kdv(),
            v0: FieldInput::Trig(TrigSpec::sine(256, 0.2)),
            dt: 1e-3,
            steps: 1000,
            record_every: 10,
            tolerance: 1e-6,
            residual_trials: 100,
            residual_tolerance: 1e-8,
        }
    }
}

impl Payload for ChEvolve {
    fn problems(&self, p: &mut Problems) {
        p.grid("v0.n", self.v0.n());
        p.positive("dt", self.dt);
        p.nonzero("record_every", self.record_every);
        p.positive("tolerance", self.tolerance);
        p.positive("residual_tolerance", self.residual_tolerance);
        p.check(classify(self.params) != OrbitClass::LinearDegenerate, || {
            "params: alpha = beta = 0 is not evolvable".into()
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HopfOracle {
    pub v0: FieldInput,
    pub fraction: f64,
    pub dt: f64,
    pub record_every: usize,
    pub tolerance: f64,
}

impl Default for HopfOracle {
    fn default() -> Self {
        Self {
            v0: FieldInput::Trig(TrigSpec::sine(256, 0.1)),
            fraction: 0.25,
            dt: 1e-3,
            record_every: 10,
            tolerance: 1e-4,
        }
    }
}

impl Payload for HopfOracle {
    fn problems(&self, p: &mut Problems) {
        p.grid("v0.n", self.v0.n());
        p.check(self.fraction > 0.0 && self.fraction < 1.0, || {
            format!("fraction must lie in (0, 1), got {}", self.fraction)
        });
        p.positive("dt", self.dt);
        p.nonzero("record_every", self.record_every);
        p.positive("tolerance", self.tolerance);
    }
}

fn default_body() -> Vec<Vec<f64>> {
    diagonal(&[1.0, 2.0, 3.0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MvRun {
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    pub omega0: Option<Vec<Vec<f64>>>,
    pub omega0_scale: f64,
    pub steps: usize,
    pub record_every: usize,
    pub spectrum_tolerance: f64,
    pub orthogonality_tolerance: f64,
    pub roundtrip_trials: usize,
    pub roundtrip_max_n: usize,
    pub roundtrip_scale: f64,
    pub roundtrip_tolerance: f64,
}

impl Default for MvRun {
    fn default() -> Self {
        Self {
            j: default_body(),
            omega0: None,
            omega0_scale: 0.1,
            steps: 1000,
            record_every: 1,
            spectrum_tolerance: 1e-10,
            orthogonality_tolerance: 1e-9,
            roundtrip_trials: 100,
            roundtrip_max_n: 6,
            roundtrip_scale: 0.2,
            roundtrip_tolerance: 1e-9,
        }
    }
}

impl Payload for MvRun {
    fn problems(&self, p: &mut Problems) {
        let body = p.result("J", serde_json::from_value::<BodyTensor>(serde_json::json!(self.j)));
        if let Some(w) = &self.omega0 {
            if let Some(w) = p.result("omega0", serde_json::from_value::<RotationMatrix>(serde_json::json!(w))) {
                if let Some(b) = &body {
                    p.check(w.dim() == b.dim(), || "omega0 and J differ in size".into());
                }
            }
        }
        p.positive("omega0_scale", self.omega0_scale);
        p.nonzero("record_every", self.record_every);
        p.check(self.roundtrip_max_n >= 2, || "roundtrip_max_n must be at least 2".into());
        p.positive("roundtrip_scale", self.roundtrip_scale);
        for (name, v) in [
            ("spectrum_tolerance", self.spectrum_tolerance),
            ("orthogonality_tolerance", self.orthogonality_tolerance),
            ("roundtrip_tolerance", self.roundtrip_tolerance),
        ] {
            p.positive(name, v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MvLimit {
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    #[serde(rename = "M0")]
    pub m0: Option<Vec<Vec<f64>>>,
    #[serde(rename = "M0_scale")]
    pub m0_scale: f64,
    pub t_final: f64,
    pub eps: Vec<f64>,
    pub dt_for_limit: f64,
    pub min_slope: f64,
}

impl Default for MvLimit {
    fn default() -> Self {
        Self {
            j: default_body(),
            m0: None,
            m0_scale: 1.0,
            t_final: 1.0,
            eps: vec![1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3],
            dt_for_limit: 1e-3,
            min_slope: 0.9,
        }
    }
}

impl Payload for MvLimit {
    fn problems(&self, p: &mut Problems) {
        let body = p.result("J", serde_json::from_value::<BodyTensor>(serde_json::json!(self.j)));
        if let Some(m) = &self.m0 {
            if let Some(m) = p.result("M0", serde_json::from_value::<SkewMatrix>(serde_json::json!(m))) {
                if let Some(b) = &body {
                    p.check(m.dim() == b.dim(), || "M0 and J differ in size".into());
                }
            }
        }
        p.positive("M0_scale", self.m0_scale);
        p.positive("t_final", self.t_final);
        p.positive("dt_for_limit", self.dt_for_limit);
        p.check(self.eps.len() >= 2, || "eps needs at least two values".into());
        p.check(self.eps.iter().all(|&e| e > 0.0 && e <= self.t_final), || {
            "eps values must lie in (0, t_final]".into()
        });
    }
}

fn default_hs_velocity() -> DiffeoInput {
    DiffeoInput::Trig(TrigSpec {
        n: 256,
        mean: 0.0,
        sin: vec![(1, 0.1)],
        cos: vec![(2, 0.05)],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HsStep {
    pub stepper: Option<String>,
    pub omega0: DiffeoInput,
    #[serde(rename = "Omega")]
    pub big_omega: f64,
    pub mode: CMode,
    pub rotation: f64,
    pub steps: usize,
    pub stationarity_directions: usize,
    pub stationarity_tolerance: f64,
    pub el2_tolerance: f64,
    pub omega_spread_tolerance: f64,
    pub negative_control: bool,
    pub negative_amplitude: f64,
    pub negative_threshold: f64,
}

impl Default for HsStep {
    fn default() -> Self {
        Self {
            stepper: None,
            omega0: default_hs_velocity(),
            big_omega: 0.5,
            mode: CMode::PeriodicC,
            rotation: 0.0,
            steps: 3,
            stationarity_directions: 20,
            stationarity_tolerance: 1e-5,
            el2_tolerance: 1e-7,
            omega_spread_tolerance: 1e-9,
            negative_control: true,
            negative_amplitude: 0.1,
            negative_threshold: 1e-2,
        }
    }
}

impl Payload for HsStep {
    fn problems(&self, p: &mut Problems) {
        p.check(self.stepper.as_deref().is_none_or(|s| s == "hs"), || {
            format!("stepper {:?} does not match hs-step", self.stepper)
        });
        p.grid("omega0.n", self.omega0.n());
        p.check(self.big_omega != 0.0 && self.big_omega.is_finite(), || {
            "Omega must be finite and nonzero".into()
        });
        p.nonzero("steps", self.steps);
        p.positive("stationarity_tolerance", self.stationarity_tolerance);
        p.positive("el2_tolerance", self.el2_tolerance);
        p.positive("omega_spread_tolerance", self.omega_spread_tolerance);
        p.positive("negative_amplitude", self.negative_amplitude);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HsSimple {
    pub stepper: Option<String>,
    pub omega0: DiffeoInput,
    #[serde(rename = "Omega")]
    pub big_omega: Option<f64>,
    pub rotation: f64,
    pub steps: usize,
    pub stationarity_directions: usize,
    pub stationarity_tolerance: f64,
    pub residual_tolerance: f64,
    pub root_find_trials: usize,
    pub root_find_tolerance: f64,
    pub identity_tolerance: f64,
    pub negative_control: bool,
    pub negative_amplitude: f64,
    pub negative_threshold: f64,
}

impl Default for HsSimple {
    fn default() -> Self {
        Self {
            stepper: None,
            big_omega: None,
            omega0: DiffeoInput::Trig(TrigSpec {
                n: 256,
                mean: 0.0,
                sin: vec![(1, 0.15)],
                cos: vec![(2, 0.05)],
            }),
            rotation: 0.1,
            steps: 3,
            stationarity_directions: 20,
            stationarity_tolerance: 1e-5,
            residual_tolerance: 1e-9,
            root_find_trials: 50,
            root_find_tolerance: 1e-10,
            identity_tolerance: 1e-10,
            negative_control: true,
            negative_amplitude: 0.1,
            negative_threshold: 1e-2,
        }
    }
}

impl Payload for HsSimple {
    fn problems(&self, p: &mut Problems) {
        p.check(self.stepper.as_deref().is_none_or(|s| s == "hs_simple"), || {
            format!("stepper {:?} does not match hs-simple", self.stepper)
        });
        p.check(self.big_omega.is_none_or(|w| w == 0.0), || {
            "Omega must be 0 for the simple discretization".into()
        });
        p.grid("omega0.n", self.omega0.n());
        p.nonzero("steps", self.steps);
        p.positive("stationarity_tolerance", self.stationarity_tolerance);
        p.positive("residual_tolerance", self.residual_tolerance);
        p.positive("root_find_tolerance", self.root_find_tolerance);
        p.positive("identity_tolerance", self.identity_tolerance);
        p.positive("negative_amplitude", self.negative_amplitude);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvarianceCheck {
    pub density: String,
    pub n: usize,
    pub trials: usize,
    pub expect_invariant: Option<bool>,
}

impl Default for InvarianceCheck {
    fn default() -> Self {
        Self {
            density: "sqrt".into(),
            n: 256,
            trials: 100,
            expect_invariant: None,
        }
    }
}

impl Payload for InvarianceCheck {
    fn problems(&self, p: &mut Problems) {
        p.result("density", LagrangianDensityV::by_name(&self.density));
        p.grid("n", self.n);
        p.nonzero("trials", self.trials);
    }
}

/// A descriptor whose payload has been parsed and checked.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    VirCheck(VirCheck),
    ChEvolve(ChEvolve),
    HopfOracle(HopfOracle),
    MvRun(MvRun),
    MvLimit(MvLimit),
    HsStep(HsStep),
    HsSimple(HsSimple),
    InvarianceCheck(InvarianceCheck),
}

fn parse<T: Payload + Default + serde::de::DeserializeOwned>(v: &Value) -> Result<T, String> {
    let payload: T = if v.is_null() {
        T::default()
    } else {
        serde_json::from_value(v.clone()).map_err(|e| format!("payload: {e}"))?
    };
    let mut p = Problems::default();
    payload.problems(&mut p);
    p.finish()?;
    Ok(payload)
}

pub fn plan(experiment: Experiment, payload: &Value) -> Result<Plan, String> {
    Ok(match experiment {
        Experiment::VirCheck => Plan::VirCheck(parse(payload)?),
        Experiment::ChEvolve => Plan::ChEvolve(parse(payload)?),
        Experiment::HopfOracle => Plan::HopfOracle(parse(payload)?),
        Experiment::MvRun => Plan::MvRun(parse(payload)?),
        Experiment::MvLimit => Plan::MvLimit(parse(payload)?),
        Experiment::HsStep => Plan::HsStep(parse(payload)?),
        Experiment::HsSimple => Plan::HsSimple(parse(payload)?),
        Experiment::InvarianceCheck => Plan::InvarianceCheck(parse(payload)?),
    })
}

//! One-shot evaluation of every bound and oracle for a prior–model pair.
//!
//! Failures of individual components are collected in [`BoundReport::errors`]
//! instead of aborting the report.

use serde::{Deserialize, Serialize};

use super::{
    delta_star, efroimovich_bound, entropy_power, gaussian_sequence_sharp, logconcave_1d_bound, reverse_epi_sweep,
    snr, theorem1_from_parts, theorem2_bound, theorem2_inputs, Branch, ReverseEpiSweep, Theorem2Form, KP_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::measures::{isotropic_gaussian, LogConcavePrior, ReferenceMeasure};
use crate::models::{regularity_check, ParametricModel, RegularityReport};
use crate::oracles::{monte_carlo_gaussian_channel, oracle_values, ConvolutionGrid, MonteCarloEstimate};
use crate::quadrature::QuadratureSpec;
use crate::tilted::tilted_reference;

/// Absolute slack allowed on every asserted inequality.
pub const CHECK_TOLERANCE: f64 = 1e-4;

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod num {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }

    pub mod opt {
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        #[derive(Serialize, Deserialize)]
        struct Wrap(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.map(Wrap).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReferenceChoice {
    GaussianStandard,
    /// `N(0, Iₙ/k)`, which satisfies `LSI(1/k)`.
    BakryEmery { k: f64 },
    /// The tilt `μ_δ` of the prior, `LSI(1/(K+δ))`.
    Tilted { delta: f64 },
}

impl ReferenceChoice {
    pub fn label(&self) -> String {
        match self {
            ReferenceChoice::GaussianStandard => "gaussian-standard".into(),
            ReferenceChoice::BakryEmery { k } => format!("bakry-emery(k={k})"),
            ReferenceChoice::Tilted { delta } => format!("tilted(delta={delta})"),
        }
    }

    pub fn build(&self, prior: &LogConcavePrior<f64>, q: &QuadratureSpec<f64>) -> Result<ReferenceMeasure<f64>> {
        let n = prior.dim();
        match *self {
            ReferenceChoice::GaussianStandard => Ok(ReferenceMeasure::gaussian_standard(n)),
            ReferenceChoice::BakryEmery { k } => {
                if !(k > 0.0) || !k.is_finite() {
                    return Err(Error::Domain(format!("bakry-emery reference needs k > 0, got {k}")));
                }
                ReferenceMeasure::bakry_emery(isotropic_gaussian(&vec![0.0; n], 1.0 / k), k)
            }
            ReferenceChoice::Tilted { delta } => Ok(tilted_reference(prior, delta, q)?.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSettings {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleToggles {
    pub mutual_information: bool,
    pub monte_carlo: Option<MonteCarloSettings>,
    pub regularity: bool,
    /// Largest `k` of the reverse EPI sweep on the prior.
    pub reverse_epi: Option<usize>,
}

impl Default for OracleToggles {
    fn default() -> Self {
        Self { mutual_information: true, monte_carlo: None, regularity: true, reverse_epi: None }
    }
}

/// Everything needed to produce a [`BoundReport`].
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub prior: LogConcavePrior<f64>,
    pub model: ParametricModel<f64>,
    pub references: Vec<ReferenceChoice>,
    pub quadrature: QuadratureSpec<f64>,
    pub oracles: OracleToggles,
}

/// A bound value with its degeneracy flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    #[serde(with = "num")]
    pub value: f64,
    pub degenerate: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Entry {
    pub reference: String,
    pub lsi_constant: f64,
    #[serde(with = "num")]
    pub relative_entropy: f64,
    #[serde(with = "num")]
    pub relative_fisher: f64,
    pub fisher_integral: f64,
    #[serde(with = "num")]
    pub rhs: f64,
    pub degenerate: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaStarEntry {
    #[serde(with = "num")]
    pub delta: f64,
    pub branch: Branch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogConcaveEntry {
    pub expected_information: f64,
    pub bound: f64,
    pub precondition_met: bool,
    pub mse_max_entropy: f64,
    pub mse_stated_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub mutual_information: f64,
    pub conditional_entropy: f64,
    pub prior_entropy: f64,
    pub mmse: f64,
    /// `(1/2πe)·exp((2/n)·h(θ|X))`.
    pub conditional_entropy_power: f64,
}

/// One inequality `lhs ≥ rhs`, up to `tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "num")]
    pub lhs: f64,
    #[serde(with = "num")]
    pub rhs: f64,
    #[serde(with = "num")]
    pub slack: f64,
    pub tolerance: f64,
    pub holds: bool,
    /// Unasserted checks are informational and never fail a report.
    pub asserted: bool,
    pub note: String,
}

impl Check {
    pub fn at_least(name: impl Into<String>, lhs: f64, rhs: f64, asserted: bool, note: impl Into<String>) -> Self {
        Self::with_tolerance(name, lhs, rhs, CHECK_TOLERANCE, asserted, note)
    }

    pub fn with_tolerance(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
        asserted: bool,
        note: impl Into<String>,
    ) -> Self {
        let slack = lhs - rhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            slack,
            tolerance,
            holds: lhs == rhs || slack >= -tolerance,
            asserted,
            note: note.into(),
        }
    }

    pub fn failed(&self) -> bool {
        self.asserted && !self.holds
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentError {
    pub component: String,
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub prior: String,
    pub model: String,
    pub n: usize,
    pub k: f64,
    pub p: f64,
    #[serde(with = "num::opt")]
    pub j: Option<f64>,
    #[serde(with = "num::opt")]
    pub jp: Option<f64>,
    pub kp: f64,
    #[serde(with = "num")]
    pub fisher_j_prior: f64,
    pub snr: Option<f64>,
    #[serde(with = "num::opt")]
    pub theorem2_phi: Option<f64>,
    #[serde(with = "num::opt")]
    pub theorem2_psi: Option<f64>,
    pub delta_star: Option<DeltaStarEntry>,
    pub theorem1: Vec<Theorem1Entry>,
    pub efroimovich: Option<BoundEntry>,
    pub van_trees: Option<BoundEntry>,
    pub logconcave_1d: Option<LogConcaveEntry>,
    pub gaussian_sequence_sharp: Option<f64>,
    pub oracle: Option<OracleEntry>,
    pub monte_carlo: Option<MonteCarloEstimate>,
    pub regularity: Option<RegularityReport>,
    pub reverse_epi: Option<ReverseEpiSweep>,
    pub checks: Vec<Check>,
    pub errors: Vec<ComponentError>,
}

impl BoundReport {
    /// No asserted inequality failed. Degenerate bounds and component
    /// errors do not count as failures.
    pub fn passed(&self) -> bool {
        !self.checks.iter().any(Check::failed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.failed())
    }

    pub fn csv_header() -> Vec<&'static str> {
        vec![
            "name", "n", "k", "p", "j", "jp", "kp", "snr", "theorem2_phi", "theorem2_psi", "delta_star",
            "efroimovich", "van_trees", "mutual_information", "mmse", "passed",
        ]
    }

    pub fn csv_row(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let bound = |b: &Option<BoundEntry>| match b {
            Some(BoundEntry { degenerate: Some(_), .. }) => "degenerate".to_string(),
            Some(b) => b.value.to_string(),
            None => String::new(),
        };
        vec![
            self.name.clone(),
            self.n.to_string(),
            self.k.to_string(),
            self.p.to_string(),
            f(self.j),
            f(self.jp),
            self.kp.to_string(),
            f(self.snr),
            f(self.theorem2_phi),
            f(self.theorem2_psi),
            f(self.delta_star.as_ref().map(|d| d.delta)),
            bound(&self.efroimovich),
            bound(&self.van_trees),
            f(self.oracle.as_ref().map(|o| o.mutual_information)),
            f(self.oracle.as_ref().map(|o| o.mmse)),
            self.passed().to_string(),
        ]
    }
}

struct Collector {
    errors: Vec<ComponentError>,
}

impl Collector {
    fn take<V>(&mut self, component: &str, r: Result<V>) -> Option<V> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(ComponentError { component: component.into(), kind: e.kind().into(), message: e.to_string() });
                None
            }
        }
    }
}

/// Computes every bound, the requested oracles, and the comparisons between
/// them.
pub fn assemble_report(s: &Scenario) -> BoundReport {
    let q = &s.quadrature;
    let prior = &s.prior;
    let m = &s.model;
    let n = prior.dim();
    let mut c = Collector { errors: Vec::new() };

    let inputs = c.take("theorem2-inputs", theorem2_inputs(prior, m, q));
    let (j, fisher_integral) = (inputs.map(|i| i.j), inputs.map(|i| i.fisher_integral));
    let (phi, psi, ds) = match inputs {
        Some(t) => (
            c.take("theorem2-phi", theorem2_bound(t.k, t.p, t.j, n, Theorem2Form::Phi)),
            c.take("theorem2-psi", theorem2_bound(t.k, t.p, t.j, n, Theorem2Form::Psi)),
            c.take("delta-star", delta_star(t.k, t.p, t.j)),
        ),
        None => (None, None, None),
    };

    let theorem1: Vec<Theorem1Entry> = match fisher_integral {
        Some(fi) => s
            .references
            .iter()
            .filter_map(|r| {
                let label = r.label();
                let mu = c.take(&format!("reference {label}"), r.build(prior, q))?;
                let t = c.take(&format!("theorem1 {label}"), theorem1_from_parts(&mu, prior.base(), fi, &q.without_domain()))?;
                Some(Theorem1Entry {
                    reference: label,
                    lsi_constant: t.lsi_constant,
                    relative_entropy: t.relative_entropy,
                    relative_fisher: t.relative_fisher,
                    fisher_integral: t.fisher_integral,
                    rhs: t.rhs,
                    degenerate: t.degenerate,
                })
            })
            .collect(),
        None => Vec::new(),
    };

    let entry = |b: super::Bound<f64>| BoundEntry { value: b.value, degenerate: b.degenerate };
    let efroimovich = c.take("efroimovich", efroimovich_bound(prior, m, q, true)).map(entry);
    let van_trees = c.take("van-trees", super::van_trees_bound(prior, m, q)).map(entry);
    let logconcave_1d = if n == 1 {
        c.take("logconcave-1d", logconcave_1d_bound(prior, m, q)).map(|l| LogConcaveEntry {
            expected_information: l.expected_information,
            bound: l.bound,
            precondition_met: l.precondition_met,
            mse_max_entropy: l.mse_max_entropy,
            mse_stated_constant: l.mse_stated_constant,
        })
    } else {
        None
    };
    let snr_value = snr(prior, m);
    let sharp = snr_value.and_then(|v| c.take("gaussian-sequence", gaussian_sequence_sharp(v, n)));

    let oracle = if s.oracles.mutual_information {
        c.take("oracle", oracle_values(prior, m, q)).map(|o| OracleEntry {
            mutual_information: o.mutual_information,
            conditional_entropy: o.conditional_entropy,
            prior_entropy: o.prior_entropy,
            mmse: o.mmse,
            conditional_entropy_power: entropy_power(o.conditional_entropy, n),
        })
    } else {
        None
    };
    let monte_carlo = s
        .oracles
        .monte_carlo
        .and_then(|mc| c.take("monte-carlo", monte_carlo_gaussian_channel(prior, m, mc.samples, mc.seed, q)));
    let regularity = if s.oracles.regularity { c.take("regularity", regularity_check(m, prior, q)) } else { None };
    let reverse_epi = s.oracles.reverse_epi.and_then(|k_max| {
        c.take(
            "reverse-epi",
            reverse_epi_sweep(prior.base(), k_max, &ConvolutionGrid::default(), &q.without_domain(), 1e-3),
        )
    });

    let mut checks = vec![Check::with_tolerance(
        "brascamp-lieb: 1 >= KP",
        1.0,
        prior.kp(),
        KP_TOLERANCE,
        true,
        "",
    )];
    if let (Some(phi), Some(psi)) = (phi, psi) {
        checks.push(Check::at_least("theorem2: phi-form >= psi-form", phi, psi, true, ""));
    }
    if let Some(o) = &oracle {
        let mi = o.mutual_information;
        if let Some(phi) = phi {
            checks.push(Check::at_least("theorem2 phi-form >= mutual information", phi, mi, true, ""));
        }
        if let Some(psi) = psi {
            checks.push(Check::at_least("theorem2 psi-form >= mutual information", psi, mi, true, ""));
        }
        for t in &theorem1 {
            let note = t.degenerate.clone().unwrap_or_default();
            checks.push(Check::at_least(format!("theorem1 [{}] >= mutual information", t.reference), t.rhs, mi, true, note));
        }
        if let Some(vt) = van_trees.as_ref().filter(|b| b.degenerate.is_none()) {
            checks.push(Check::at_least("mmse >= van trees", o.mmse, vt.value, true, ""));
        }
        if let Some(ef) = efroimovich.as_ref().filter(|b| b.degenerate.is_none()) {
            checks.push(Check::at_least(
                "conditional entropy power >= efroimovich",
                o.conditional_entropy_power,
                ef.value,
                true,
                "",
            ));
        }
        if let Some(l) = &logconcave_1d {
            let e2h = (2.0 * o.conditional_entropy).exp();
            let pre = if l.precondition_met { "" } else { "precondition Var >= 1/EI not met" };
            checks.push(Check::at_least("exp(2h(theta|X)) >= (4/e^2)/EI", e2h, l.bound, l.precondition_met, pre));
            checks.push(Check::at_least("mmse >= (4/e^2)/(2 pi e EI)", o.mmse, l.mse_max_entropy, l.precondition_met, pre));
            checks.push(Check::at_least(
                "mmse >= (4/e^2)/EI",
                o.mmse,
                l.mse_stated_constant,
                false,
                "informational: reads the entropic bound directly as a risk bound",
            ));
        }
        if let Some(sh) = sharp {
            checks.push(Check::at_least(
                "mutual information >= (n/2)log(1+snr)",
                mi,
                sh,
                false,
                "equality for Gaussian priors; informational otherwise",
            ));
        }
    }
    if let Some(r) = &regularity {
        checks.push(Check::with_tolerance(
            "regularity: tolerance >= max |int grad f|",
            crate::models::REGULARITY_TOLERANCE,
            r.max_norm,
            0.0,
            false,
            "precondition of the bounds, reported only",
        ));
    }
    if let Some(r) = reverse_epi.as_ref().filter(|r| r.degenerate.is_none()) {
        let last = r.rows.last();
        checks.push(Check::with_tolerance(
            "reverse epi holds from the recorded threshold",
            if r.persists { 1.0 } else { 0.0 },
            1.0,
            0.0,
            true,
            format!("threshold {:?}; last row lhs {:?} rhs {:?}", r.threshold, last.map(|x| x.lhs), last.map(|x| x.rhs)),
        ));
    }

    BoundReport {
        name: s.name.clone(),
        prior: prior.base().label().to_string(),
        model: m.label().to_string(),
        n,
        k: prior.k(),
        p: prior.p(),
        j,
        jp: j.map(|j| j * prior.p()),
        kp: prior.kp(),
        fisher_j_prior: prior.fisher_j(),
        snr: snr_value,
        theorem2_phi: phi,
        theorem2_psi: psi,
        delta_star: ds.map(|d| DeltaStarEntry { delta: d.delta, branch: d.branch }),
        theorem1,
        efroimovich,
        van_trees,
        logconcave_1d,
        gaussian_sequence_sharp: sharp,
        oracle,
        monte_carlo,
        regularity,
        reverse_epi,
        checks,
        errors: c.errors,
    }
}

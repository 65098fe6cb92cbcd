//! Density-increment certificates, the three-set Bourgain trichotomy, the
//! weak-bound iteration and the audit of frequency-set growth.
//!
//! A certificate of strength `[δ, d′; C]` for `A ⊆ B` relative to `B′`
//! (rank `d`) consists of `B″ = B′_ρ ∩ B̃` with `B̃ = Bohr(Γ̃, ν̃)` and a
//! translate `x` such that
//!
//! ```text
//! |Γ̃| ≤ C d′
//! (ρ/4)^d ∏ ν̃(γ)/8 ≥ (2d(d′+1))^{-C(d+d′)}
//! 1_A ∗ μ_{B″}(x) ≥ (1 + δ/C) α
//! B″ regular
//! ```
//!
//! For rank-0 `B′` the base `2d(d′+1)` is evaluated with `d` replaced by 1.

use serde::{Deserialize, Serialize};

use crate::bohr::{BohrSet, BohrSpec};
use crate::counting::{
    nontrivial_solutions, progressions_dichotomy, translate_counts, Check, DichotomyReport,
};
use crate::endo::{Endomorphism, EquationSystem};
use crate::error::{Error, Result};
use crate::group::{FiniteAbelianGroup, Subset};

const WIDTH_REL_TOL: f64 = 1e-12;
const NORM_REL_TOL: f64 = 1e-12;

/// Tunable constants of the engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncrementParams {
    /// Constant `c` in `ρ ≤ cαε/d` for the trichotomy (checked, not enforced).
    pub c: f64,
    /// `Õ_x(1) = tilde_c1 · log₂(2/x)^tilde_c2`.
    pub tilde_c1: f64,
    pub tilde_c2: f64,
    /// `ρ = rho_c1 · αε/d` for the dilates of `B★`.
    pub rho_c1: f64,
    /// `ρ′ = rho_c2 · α/d`.
    pub rho_c2: f64,
    pub epsilon: f64,
    /// Extra dilation of `B′` before intersecting with `B̃`.
    pub sigma: f64,
    pub max_steps: usize,
    /// Certificates needing a larger `C` are discarded.
    pub max_constant: f64,
    pub max_order: usize,
}

impl Default for IncrementParams {
    fn default() -> Self {
        Self {
            c: 1.0 / 1024.0,
            tilde_c1: 1.0,
            tilde_c2: 1.0,
            rho_c1: 1.0,
            rho_c2: 1.0,
            epsilon: 0.25,
            sigma: 1.0,
            max_steps: 8,
            max_constant: 1024.0,
            max_order: 1 << 16,
        }
    }
}

impl IncrementParams {
    pub fn tilde_o(&self, x: f64) -> f64 {
        self.tilde_c1 * (2.0 / x).log2().powf(self.tilde_c2)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c", self.c),
            ("tilde_c1", self.tilde_c1),
            ("tilde_c2", self.tilde_c2),
            ("rho_c1", self.rho_c1),
            ("rho_c2", self.rho_c2),
            ("sigma", self.sigma),
            ("max_constant", self.max_constant),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {} outside (0, 1)",
                self.epsilon
            )));
        }
        if self.sigma > 1.0 {
            return Err(Error::InvalidParameter("sigma must be at most 1".into()));
        }
        Ok(())
    }
}

fn size_base(d: usize, d_prime: f64) -> f64 {
    2.0 * d.max(1) as f64 * (d_prime + 1.0)
}

/// `ln((ρ/4)^d ∏ ν̃/8)`.
fn size_lhs_log(d: usize, rho: f64, tilde_widths: &[f64]) -> f64 {
    d as f64 * (rho / 4.0).ln() + tilde_widths.iter().map(|w| (w / 8.0).ln()).sum::<f64>()
}

/// Smallest `C` meeting the rank, size and norm conditions (times a
/// `1 + 10⁻⁹` margin), or `None` if no finite `C` works.
pub fn derive_constant(
    d: usize,
    d_prime: f64,
    rho: f64,
    tilde_widths: &[f64],
    delta: f64,
    alpha: f64,
    value: f64,
) -> Option<f64> {
    let n_tilde = tilde_widths.len() as f64;
    let c_rank = if n_tilde == 0.0 {
        0.0
    } else if d_prime > 0.0 {
        n_tilde / d_prime
    } else {
        return None;
    };
    let lhs = size_lhs_log(d, rho, tilde_widths);
    let span = d as f64 + d_prime;
    let c_size = if lhs >= 0.0 {
        0.0
    } else if span > 0.0 && lhs.is_finite() {
        -lhs / (span * size_base(d, d_prime).ln())
    } else {
        return None;
    };
    if value <= alpha {
        return None;
    }
    let c_norm = delta * alpha / (value - alpha);
    Some(c_rank.max(c_size).max(c_norm) * (1.0 + 1e-9))
}

#[derive(Clone, Debug)]
pub struct IncrementCertificate {
    pub b_prime: BohrSet,
    pub rho: f64,
    pub b_tilde: BohrSet,
    pub b_double: BohrSet,
    pub delta: f64,
    pub d_prime: f64,
    pub constant: f64,
    pub translate: usize,
    /// `1_A ∗ μ_{B″}(translate)`.
    pub density: f64,
}

#[derive(Serialize)]
struct CertificateView {
    b_prime: BohrSpec,
    rank: usize,
    rho: f64,
    b_tilde: BohrSpec,
    b_double: BohrSpec,
    size: usize,
    delta: f64,
    d_prime: f64,
    constant: f64,
    translate: Vec<u64>,
    density: f64,
}

impl Serialize for IncrementCertificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CertificateView {
            b_prime: self.b_prime.to_spec(false),
            rank: self.b_prime.rank(),
            rho: self.rho,
            b_tilde: self.b_tilde.to_spec(false),
            b_double: self.b_double.to_spec(false),
            size: self.b_double.len(),
            delta: self.delta,
            d_prime: self.d_prime,
            constant: self.constant,
            translate: self.b_double.group().coords(self.translate),
            density: self.density,
        }
        .serialize(s)
    }
}

impl IncrementCertificate {
    /// Builds `B″ = B′_ρ ∩ B̃`, regularizes it (absorbing the regularizing
    /// factor into `ρ` and `ν̃`), finds the best translate and derives `C`.
    pub fn build(
        a: &Subset,
        alpha: f64,
        b_prime: &BohrSet,
        rho: f64,
        b_tilde: &BohrSet,
        delta: f64,
        d_prime: f64,
    ) -> Result<Option<Self>> {
        let raw = if rho == 1.0 { b_prime.clone() } else { b_prime.dilate(rho)? };
        let raw = raw.intersect(b_tilde)?;
        let (r, b_double) = raw.regularize()?;
        let (rho, b_tilde) = if r == 1.0 {
            (rho, b_tilde.clone())
        } else {
            (rho * r, b_tilde.dilate(r)?)
        };
        if b_double.is_empty() {
            return Ok(None);
        }
        let (translate, count) = best_translate(a, b_double.elements())?;
        let density = count as f64 / b_double.len() as f64;
        let Some(constant) = derive_constant(
            b_prime.rank(),
            d_prime,
            rho,
            b_tilde.widths(),
            delta,
            alpha,
            density,
        ) else {
            return Ok(None);
        };
        Ok(Some(Self {
            b_prime: b_prime.clone(),
            rho,
            b_tilde,
            b_double,
            delta,
            d_prime,
            constant,
            translate,
            density,
        }))
    }
}

/// Smallest `x` maximizing `|A ∩ (x + B)|`, with that count.
pub fn best_translate(a: &Subset, b: &Subset) -> Result<(usize, usize)> {
    let counts = translate_counts(a, b)?;
    let mut best = (0usize, counts[0]);
    for (x, &c) in counts.iter().enumerate() {
        if c > best.1 {
            best = (x, c);
        }
    }
    Ok(best)
}

fn widths_close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= WIDTH_REL_TOL * x.abs().max(y.abs()).max(1e-300))
}

/// Same frequency set, widths equal up to rounding, identical element sets.
pub fn same_bohr_set(a: &BohrSet, b: &BohrSet) -> bool {
    a.group() == b.group()
        && a.frequency_indices() == b.frequency_indices()
        && widths_close(a.widths(), b.widths())
        && a.elements() == b.elements()
}

#[derive(Clone, Debug, Serialize)]
pub struct IncrementReport {
    pub alpha: f64,
    pub rank: usize,
    pub rank_check: Check,
    /// Logarithms of both sides of the size inequality.
    pub size_check: Check,
    pub norm_check: Check,
    pub regular: bool,
    /// Logarithms of `|B″|` and `(2d(d′+1))^{-C(d+d′)} |B′|`.
    pub implied_size_check: Check,
    pub witness_translate: usize,
    pub witness_density: f64,
    pub base_regular: bool,
    pub b_prime_regular: bool,
    pub valid: bool,
}

/// Checks every condition of the certificate from scratch.
pub fn verify_increment(
    a: &Subset,
    b: &BohrSet,
    b_prime: &BohrSet,
    cert: &IncrementCertificate,
) -> Result<IncrementReport> {
    if a.group() != b.group() || b.group() != b_prime.group() {
        return Err(Error::GroupMismatch);
    }
    if !a.is_subset_of(b.elements()) {
        return Err(Error::NotSubset("A"));
    }
    if b.is_empty() {
        return Err(Error::EmptySet);
    }
    if !same_bohr_set(&cert.b_prime, b_prime) {
        return Err(Error::MalformedCertificate(
            "certificate is relative to a different B'".into(),
        ));
    }
    if !(cert.rho > 0.0 && cert.rho <= 1.0) {
        return Err(Error::MalformedCertificate(format!("rho = {} outside (0, 1]", cert.rho)));
    }
    if !(cert.constant > 0.0) || !(cert.delta > 0.0) || !(cert.d_prime >= 0.0) {
        return Err(Error::MalformedCertificate("strength parameters out of range".into()));
    }
    let expected = b_prime.dilate(cert.rho)?.intersect(&cert.b_tilde)?;
    if !same_bohr_set(&expected, &cert.b_double) {
        return Err(Error::MalformedCertificate(
            "B'' is not B'_rho intersected with B~".into(),
        ));
    }

    let alpha = a.len() as f64 / b.len() as f64;
    let d = b_prime.rank();
    let c = cert.constant;
    let n_tilde = cert.b_tilde.rank() as f64;
    let rank_check = Check::at_least("C d' >= |Gamma~|", c * cert.d_prime, n_tilde, 1e-12);

    let base_ln = size_base(d, cert.d_prime).ln();
    let span = d as f64 + cert.d_prime;
    let lhs = size_lhs_log(d, cert.rho, cert.b_tilde.widths());
    let rhs = -c * span * base_ln;
    let size_check = Check::at_least("ln((rho/4)^d prod nu~/8) >= -C(d+d') ln(2d(d'+1))", lhs, rhs, 1e-12);

    let (x, count) = best_translate(a, cert.b_double.elements())?;
    let value = count as f64 / cert.b_double.len() as f64;
    let norm_check = Check::at_least(
        "max 1_A * mu_B'' >= (1 + delta/C) alpha",
        value,
        (1.0 + cert.delta / c) * alpha,
        NORM_REL_TOL,
    );

    let regular = cert.b_double.is_regular();
    let implied_size_check = Check::at_least(
        "ln|B''| >= ln((2d(d'+1))^(-C(d+d')) |B'|)",
        (cert.b_double.len() as f64).ln(),
        rhs + (b_prime.len() as f64).ln(),
        1e-12,
    );
    let valid = rank_check.pass && size_check.pass && norm_check.pass && regular;
    Ok(IncrementReport {
        alpha,
        rank: d,
        rank_check,
        size_check,
        norm_check,
        regular,
        implied_size_check,
        witness_translate: x,
        witness_density: value,
        base_regular: b.is_regular(),
        b_prime_regular: b_prime.is_regular(),
        valid,
    })
}

impl IncrementReport {
    /// The size inequality implies the cardinality bound; a certificate that
    /// passes the former but not the latter is an internal inconsistency.
    pub fn implication_holds(&self) -> bool {
        !self.size_check.pass || self.implied_size_check.pass
    }
}

/// Rewrites a certificate relative to `B′_{ρ/d}` as one relative to `B′`,
/// with `C` increased by `Õ_ρ(1)`.
pub fn rebase_certificate(
    cert: &IncrementCertificate,
    b_prime: &BohrSet,
    rho: f64,
    params: &IncrementParams,
) -> Result<IncrementCertificate> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} outside (0, 1)")));
    }
    let d = b_prime.rank().max(1) as f64;
    let inner = b_prime.dilate(rho / d)?;
    if !same_bohr_set(&inner, &cert.b_prime) {
        return Err(Error::MalformedCertificate(
            "certificate is not relative to B'_{rho/d}".into(),
        ));
    }
    Ok(IncrementCertificate {
        b_prime: b_prime.clone(),
        rho: cert.rho * rho / d,
        constant: cert.constant + params.tilde_o(rho),
        ..cert.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum BourgainBranch {
    /// `1_𝒜 ∗ μ_{Bᵢ}(x) ≥ (1-ε)α` for all three `i`.
    FullDensity { x: usize, values: [f64; 3] },
    /// No such `x` in `ℬ`; the best single `(x, i)` over `G`.
    Increment { x: usize, index: usize, value: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct BourgainReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub rho_bound: f64,
    pub precondition_ok: bool,
    pub branch: BourgainBranch,
    /// `(x, i, value)` maximizing `1_𝒜 ∗ μ_{Bᵢ}(x)` over all of `G`.
    pub best: (usize, usize, f64),
    /// Strength `[ε, 0; C]` certificate relative to `B_i` at `best`, when a
    /// finite `C` exists.
    pub candidate: Option<IncrementCertificate>,
}

pub fn bourgain_trichotomy(
    a: &Subset,
    b: &BohrSet,
    epsilon: f64,
    parts: [&BohrSet; 3],
    params: &IncrementParams,
) -> Result<BourgainReport> {
    if a.group() != b.group() || parts.iter().any(|p| p.group() != b.group()) {
        return Err(Error::GroupMismatch);
    }
    if !a.is_subset_of(b.elements()) {
        return Err(Error::NotSubset("A"));
    }
    if a.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Degenerate("trichotomy needs nonempty sets".into()));
    }
    let alpha = a.len() as f64 / b.len() as f64;
    let d = b.rank().max(1) as f64;
    let rho_bound = params.c * alpha * epsilon / d;
    let shrunk = b.dilate(rho_bound.min(1.0))?;
    let precondition_ok = parts.iter().all(|p| p.elements().is_subset_of(shrunk.elements()));

    let values: Vec<Vec<f64>> = parts
        .iter()
        .map(|p| {
            let n = p.len() as f64;
            translate_counts(a, p.elements()).map(|c| c.into_iter().map(|v| v as f64 / n).collect())
        })
        .collect::<Result<_>>()?;
    let target = (1.0 - epsilon) * alpha;
    let full = b.elements().members().iter().copied().find(|&x| {
        values
            .iter()
            .all(|v| v[x] >= target - NORM_REL_TOL * target.max(1.0))
    });

    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for x in a.group().elements() {
        for (i, v) in values.iter().enumerate() {
            if v[x] > best.2 {
                best = (x, i + 1, v[x]);
            }
        }
    }
    let branch = match full {
        Some(x) => BourgainBranch::FullDensity {
            x,
            values: [values[0][x], values[1][x], values[2][x]],
        },
        None => BourgainBranch::Increment {
            x: best.0,
            index: best.1,
            value: best.2,
        },
    };
    let part = parts[best.1 - 1];
    let candidate = IncrementCertificate::build(
        a,
        alpha,
        part,
        1.0,
        &BohrSet::full(a.group()),
        epsilon,
        0.0,
    )?
    .filter(|c| c.constant <= params.max_constant);
    Ok(BourgainReport {
        alpha,
        epsilon,
        rho_bound,
        precondition_ok,
        branch,
        best,
        candidate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    SolutionsFound,
    DensityCap,
    Stalled,
    StepCap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepBranch {
    FullDensity,
    Increment,
}

/// Where the increment of a step came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IncrementSource {
    /// `B″` built from `S((B★)_{ρρ′}) ∩ S(B̃)`; `s` is `"id"` or `"t3_inv"`.
    Spectral { s: &'static str },
    /// Single-set increment on `B_index` from the trichotomy.
    Bourgain { index: usize },
}

#[derive(Clone, Debug)]
pub struct IterationStep {
    pub n: usize,
    pub alpha: f64,
    pub rank: usize,
    pub rank_star: usize,
    pub mu_star: f64,
    pub branch: StepBranch,
    pub rho: f64,
    pub rho_prime: f64,
    /// `Γ̃` before the map `S` is applied.
    pub gamma_tilde: Vec<usize>,
    pub source: Option<IncrementSource>,
    pub certificate: Option<IncrementCertificate>,
    pub translate: Option<usize>,
    pub dichotomy: Option<DichotomyReport>,
    /// `A_n ⊆ B_n`, with `A_n + offset ⊆ A₀`.
    pub set: Subset,
    pub offset: usize,
    pub bohr: BohrSet,
    pub star: BohrSet,
}

#[derive(Clone, Debug)]
pub struct IterationLog {
    pub group: FiniteAbelianGroup,
    pub initial: BohrSet,
    pub steps: Vec<IterationStep>,
    pub termination: Termination,
    /// A nontrivial solution in the original set.
    pub solution: Option<[usize; 3]>,
}

#[derive(Serialize)]
struct StepView<'a> {
    step: usize,
    alpha: f64,
    rank: usize,
    rank_star: usize,
    mu_star: f64,
    branch: StepBranch,
    rho: f64,
    rho_prime: f64,
    gamma_tilde: Vec<Vec<u64>>,
    source: &'a Option<IncrementSource>,
    certificate: &'a Option<IncrementCertificate>,
    translate: Option<Vec<u64>>,
    set_size: usize,
    offset: Vec<u64>,
    frequencies: Vec<Vec<u64>>,
    widths: &'a [f64],
    dichotomy: &'a Option<DichotomyReport>,
}

#[derive(Serialize)]
struct LogView<'a> {
    factors: &'a [u64],
    termination: Termination,
    solution: Option<Vec<Vec<u64>>>,
    steps: Vec<StepView<'a>>,
}

impl Serialize for IterationLog {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let g = &self.group;
        LogView {
            factors: g.factors(),
            termination: self.termination,
            solution: self.solution.map(|sol| sol.iter().map(|&v| g.coords(v)).collect()),
            steps: self
                .steps
                .iter()
                .map(|st| StepView {
                    step: st.n,
                    alpha: st.alpha,
                    rank: st.rank,
                    rank_star: st.rank_star,
                    mu_star: st.mu_star,
                    branch: st.branch,
                    rho: st.rho,
                    rho_prime: st.rho_prime,
                    gamma_tilde: st.gamma_tilde.iter().map(|&c| g.coords(c)).collect(),
                    source: &st.source,
                    certificate: &st.certificate,
                    translate: st.translate.map(|x| g.coords(x)),
                    set_size: st.set.len(),
                    offset: g.coords(st.offset),
                    frequencies: st.bohr.frequency_indices().iter().map(|&c| g.coords(c)).collect(),
                    widths: st.bohr.widths(),
                    dichotomy: &st.dichotomy,
                })
                .collect(),
        }
        .serialize(s)
    }
}

/// One CSV row of the iteration trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub alpha: f64,
    pub rank: usize,
    pub rank_star: usize,
    pub mu_star: f64,
    pub branch: StepBranch,
}

impl IterationLog {
    pub fn trace_rows(&self) -> Vec<TraceRow> {
        self.steps
            .iter()
            .map(|s| TraceRow {
                step: s.n,
                alpha: s.alpha,
                rank: s.rank,
                rank_star: s.rank_star,
                mu_star: s.mu_star,
                branch: s.branch,
            })
            .collect()
    }

    pub fn increment_steps(&self) -> impl Iterator<Item = &IterationStep> {
        self.steps.iter().filter(|s| s.certificate.is_some())
    }
}

/// `B ∩ T₂B ∩ T₃B`.
pub fn star(b: &BohrSet, sys: &EquationSystem) -> Result<BohrSet> {
    b.intersect(&b.apply_automorphism(sys.t(2))?)?
        .intersect(&b.apply_automorphism(sys.t(3))?)
}

fn inverse(t: &Endomorphism) -> Endomorphism {
    t.inverse().expect("coefficients of a valid system are automorphisms")
}

/// Runs the density-increment iteration from `A ⊆ B` until solutions are
/// exhibited, the density saturates, no certificate can be built, or the
/// step cap is hit.
pub fn run_weak_iteration(
    a: &Subset,
    b: &BohrSet,
    sys: &EquationSystem,
    params: &IncrementParams,
) -> Result<IterationLog> {
    params.validate()?;
    let g = sys.group();
    if g.order() > params.max_order {
        return Err(Error::TooLarge(g.order()));
    }
    if !sys.is_canonical() {
        return Err(Error::NotCanonical);
    }
    if a.group() != g || b.group() != g {
        return Err(Error::GroupMismatch);
    }
    if !a.is_subset_of(b.elements()) {
        return Err(Error::NotSubset("A"));
    }
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    if !b.is_regular() {
        return Err(Error::InvalidParameter("B must be regular".into()));
    }
    let t2_inv = inverse(sys.t(2));
    let t3_inv = inverse(sys.t(3));

    let mut log = IterationLog {
        group: g.clone(),
        initial: b.clone(),
        steps: Vec::new(),
        termination: Termination::StepCap,
        solution: None,
    };
    let mut set = a.clone();
    let mut bohr = b.clone();
    let mut offset = g.zero();

    for n in 0..params.max_steps {
        let alpha = set.len() as f64 / bohr.len() as f64;
        let bstar = star(&bohr, sys)?;
        let d = bohr.rank().max(1) as f64;
        let rho_raw = (params.rho_c1 * alpha * params.epsilon / d).min(1.0);
        let (r1, b1) = bstar.dilate(rho_raw)?.regularize()?;
        let rho = rho_raw * r1;
        let rho_prime_raw = (params.rho_c2 * alpha / d).min(1.0);
        let (r3, b3_base) = bstar.dilate(rho * rho_prime_raw)?.regularize()?;
        let rho_prime = rho_prime_raw * r3;
        let b2 = b1.apply_automorphism(&t2_inv)?;
        let b3 = b3_base.apply_automorphism(&t3_inv)?;

        let tri = bourgain_trichotomy(&set, &bohr, params.epsilon, [&b1, &b2, &b3], params)?;
        let mut step = IterationStep {
            n,
            alpha,
            rank: bohr.rank(),
            rank_star: bstar.rank(),
            mu_star: bstar.density(),
            branch: StepBranch::Increment,
            rho,
            rho_prime,
            gamma_tilde: Vec::new(),
            source: None,
            certificate: None,
            translate: None,
            dichotomy: None,
            set: set.clone(),
            offset,
            bohr: bohr.clone(),
            star: bstar.clone(),
        };

        let mut chosen: Option<(IncrementCertificate, IncrementSource, Vec<usize>)> = None;
        match tri.branch {
            BourgainBranch::FullDensity { x, .. } => {
                step.branch = StepBranch::FullDensity;
                step.translate = Some(x);
                let shifted = set.translate(g.neg(x));
                let parts = [
                    shifted.intersection(b1.elements())?,
                    shifted.intersection(b2.elements())?,
                    shifted.intersection(b3.elements())?,
                ];
                let sols = nontrivial_solutions(&parts[0], &parts[1], &parts[2], sys, 1)?;
                if let Some(s) = sols.first() {
                    let shift = g.add(x, offset);
                    let lifted = s.map(|v| g.add(v, shift));
                    if !lifted.iter().all(|&v| a.contains(v))
                        || !crate::counting::is_solution(sys, lifted)
                    {
                        return Err(Error::Degenerate("lifted solution failed to verify".into()));
                    }
                    log.solution = Some(lifted);
                    log.termination = Termination::SolutionsFound;
                    log.steps.push(step);
                    return Ok(log);
                }
                if alpha >= 1.0 - 1e-12 {
                    log.termination = Termination::DensityCap;
                    log.steps.push(step);
                    return Ok(log);
                }
                let rel_min = [
                    parts[0].len() as f64 / b1.len() as f64,
                    parts[1].len() as f64 / b2.len() as f64,
                    parts[2].len() as f64 / b3.len() as f64,
                ]
                .into_iter()
                .fold(1.0, f64::min);
                let dich =
                    progressions_dichotomy(&parts[0], &parts[1], &parts[2], &b1, &b3, sys, rel_min)?;
                chosen = spectral_increment(&set, alpha, &dich, &b3_base, &t3_inv, params)?;
                step.dichotomy = Some(dich);
            }
            BourgainBranch::Increment { .. } => {}
        }
        if chosen.is_none() {
            if let Some(cert) = tri.candidate.clone() {
                let index = tri.best.1;
                if verify_increment(&set, &bohr, &cert.b_prime, &cert)?.valid {
                    chosen = Some((cert, IncrementSource::Bourgain { index }, Vec::new()));
                }
            }
        }
        let Some((cert, source, gamma)) = chosen else {
            log.termination = Termination::Stalled;
            log.steps.push(step);
            return Ok(log);
        };

        let x = cert.translate;
        let next_set = set.translate(g.neg(x)).intersection(cert.b_double.elements())?;
        step.translate = Some(x);
        step.gamma_tilde = gamma;
        step.source = Some(source);
        let next_bohr = cert.b_double.clone();
        step.certificate = Some(cert);
        log.steps.push(step);

        offset = g.add(offset, x);
        set = next_set;
        bohr = next_bohr;
    }
    log.termination = Termination::StepCap;
    Ok(log)
}

type Chosen = Option<(IncrementCertificate, IncrementSource, Vec<usize>)>;

/// Tries `B″ = S((B★)_{ρρ′}) ∩ S(Bohr(Γ̃, 1/(2|Γ̃|)))` for `S ∈ {Id, T₃⁻¹}`
/// and `Γ̃` the top spectral contributors, keeping the one with the smallest
/// constant `C` (then the largest density).
fn spectral_increment(
    set: &Subset,
    alpha: f64,
    dich: &DichotomyReport,
    b3_base: &BohrSet,
    t3_inv: &Endomorphism,
    params: &IncrementParams,
) -> Result<Chosen> {
    let g = set.group();
    let ranked: Vec<usize> = dich.spectral_set().contributions.iter().map(|c| c.0).collect();
    let cap = ((1.0 / alpha).ceil() as usize).min(ranked.len());
    let mut sizes = Vec::new();
    let mut k = 1;
    while k < cap {
        sizes.push(k);
        k *= 2;
    }
    if cap > 0 {
        sizes.push(cap);
    }
    let b3_image = b3_base.apply_automorphism(t3_inv)?;
    let d_prime = 1.0 / alpha;
    let mut chosen: Chosen = None;
    for &k in &sizes {
        let gamma: Vec<usize> = ranked[..k].to_vec();
        let width = 1.0 / (2.0 * k as f64);
        let tilde = BohrSet::from_indexed(g, gamma.iter().map(|&c| (c, width)).collect())?;
        for (name, b_prime, b_tilde) in [
            ("id", b3_base.clone(), tilde.clone()),
            ("t3_inv", b3_image.clone(), tilde.apply_automorphism(t3_inv)?),
        ] {
            let Some(cert) =
                IncrementCertificate::build(set, alpha, &b_prime, params.sigma, &b_tilde, 1.0, d_prime)?
            else {
                continue;
            };
            if cert.constant > params.max_constant {
                continue;
            }
            let better = chosen.as_ref().map_or(true, |c| {
                cert.constant < c.0.constant
                    || (cert.constant == c.0.constant && cert.density > c.0.density)
            });
            if better {
                chosen = Some((cert, IncrementSource::Spectral { s: name }, gamma.clone()));
            }
        }
    }
    Ok(chosen)
}

#[derive(Clone, Debug, Serialize)]
pub struct RankAuditStep {
    pub step: usize,
    pub rank: usize,
    pub rank_star: usize,
    pub star_bound_ok: bool,
    /// Commuting case: `|W_{2n}|` and the containment verdict.
    pub word_set_size: Option<usize>,
    pub contained: Option<bool>,
    pub missing: Vec<Vec<u64>>,
    /// `rk(B_n) / (max(n,1)² (rk B₀ + Σ|Γ̃_j|))`.
    pub ratio: Option<f64>,
    pub ratio_ok: Option<bool>,
    /// Non-commuting case: `3ⁿ rk(B₀) + Σ 3^{n-j} |Γ̃_j|`.
    pub fallback_bound: Option<f64>,
    pub fallback_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankAudit {
    pub commuting: bool,
    pub ratio_constant: f64,
    pub steps: Vec<RankAuditStep>,
    pub violations: usize,
    pub notice: Option<String>,
}

/// Checks the frequency sets recorded in `log` against the growth predicted
/// from the word sets (commuting `T₂, T₃`) or the `3ⁿ` fallback.
pub fn rank_growth_audit(
    log: &IterationLog,
    sys: &EquationSystem,
    ratio_constant: f64,
) -> Result<RankAudit> {
    let commuting = sys.t(2).commutes_with(sys.t(3));
    if log.steps.is_empty() {
        return Ok(RankAudit {
            commuting,
            ratio_constant,
            steps: Vec::new(),
            violations: 0,
            notice: Some("log has no frequency records; audit skipped".into()),
        });
    }
    let g = sys.group();
    let r0 = log.initial.rank();
    let base: Vec<usize> = log.initial.frequency_indices().to_vec();
    let mut steps = Vec::new();
    let mut violations = 0;
    for (n, st) in log.steps.iter().enumerate() {
        let added: Vec<&Vec<usize>> = log.steps[..n].iter().map(|s| &s.gamma_tilde).collect();
        let added_total: usize = added.iter().map(|v| v.len()).sum();
        let star_bound_ok = st.rank_star <= 3 * st.rank;
        let mut out = RankAuditStep {
            step: n,
            rank: st.rank,
            rank_star: st.rank_star,
            star_bound_ok,
            word_set_size: None,
            contained: None,
            missing: Vec::new(),
            ratio: None,
            ratio_ok: None,
            fallback_bound: None,
            fallback_ok: None,
        };
        if commuting {
            let words = sys.word_set(2 * n)?;
            let mut predicted = vec![false; g.order()];
            for &gamma in base.iter().chain(added.iter().flat_map(|v| v.iter())) {
                for w in &words.elements {
                    predicted[w.dual_apply(gamma)] = true;
                }
            }
            let missing: Vec<Vec<u64>> = st
                .bohr
                .frequency_indices()
                .iter()
                .filter(|&&c| !predicted[c])
                .map(|&c| g.coords(c))
                .collect();
            let denom = (n.max(1) * n.max(1)) as f64 * (r0 + added_total) as f64;
            let ratio = if denom > 0.0 {
                st.rank as f64 / denom
            } else if st.rank == 0 {
                0.0
            } else {
                f64::INFINITY
            };
            out.word_set_size = Some(words.len());
            out.contained = Some(missing.is_empty());
            out.missing = missing;
            out.ratio = Some(ratio);
            out.ratio_ok = Some(ratio <= ratio_constant);
        } else {
            let mut bound = 3f64.powi(n as i32) * r0 as f64;
            for (j, v) in added.iter().enumerate() {
                bound += 3f64.powi((n - j - 1) as i32) * v.len() as f64;
            }
            out.fallback_bound = Some(bound);
            out.fallback_ok = Some(st.rank as f64 <= bound);
        }
        let bad = !out.star_bound_ok
            || out.contained == Some(false)
            || out.ratio_ok == Some(false)
            || out.fallback_ok == Some(false);
        if bad {
            violations += 1;
        }
        steps.push(out);
    }
    Ok(RankAudit {
        commuting,
        ratio_constant,
        steps,
        violations,
        notice: None,
    })
}

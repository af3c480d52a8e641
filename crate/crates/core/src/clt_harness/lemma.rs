use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chains::{
    center, conditional_expectation, direct_lag_covariance, random_reversible_chain, spectral_decompose,
    FiniteReversibleChain,
};
use crate::numerics::RngStream;
use crate::{Error, Result};

pub const INEQUALITY_SLACK: f64 = 1e-12;
pub const EQUALITY_TOL: f64 = 1e-10;

/// The covariance relations for stationary reversible chains, with
/// `c_k = E(Y_0 Y_k)` and `S(l, j) = sum_{k=2l}^{j} c_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `E(E_0 Y_k E_0 Y_j) = c_{k+j}`
    ConditionalProduct,
    /// `c_{2k} + c_{2k+1} >= 0`
    AdjacentPairSum,
    /// `c_{2j} >= c_{2k} >= 0` for `j <= k`
    EvenLagMonotone,
    /// `c_k <= c_2` for `k >= 2`
    DominatedByLagTwo,
    /// `S(l, j) >= 0` for `j >= 2l`
    TailSumNonnegative,
    /// `max_{2l <= j <= n} S(l, j) <= S(l, n) + c_{2l}`
    TailSumMaximal,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::ConditionalProduct,
        Relation::AdjacentPairSum,
        Relation::EvenLagMonotone,
        Relation::DominatedByLagTwo,
        Relation::TailSumNonnegative,
        Relation::TailSumMaximal,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub lags: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationResult {
    pub relation: Relation,
    pub pass: bool,
    /// Smallest margin over all checks; negative means violated.
    pub worst_margin: f64,
    pub checks: usize,
    /// The check attaining the worst margin.
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub chain_id: String,
    pub function_id: String,
    pub max_lag: usize,
    pub relations: Vec<RelationResult>,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.relations.iter().all(|r| r.pass)
    }

    pub fn relation(&self, r: Relation) -> &RelationResult {
        self.relations
            .iter()
            .find(|x| x.relation == r)
            .expect("all relations are reported")
    }
}

struct Tracker {
    relation: Relation,
    worst: f64,
    checks: usize,
    witness: Option<Witness>,
}

impl Tracker {
    fn new(relation: Relation) -> Self {
        Self {
            relation,
            worst: f64::INFINITY,
            checks: 0,
            witness: None,
        }
    }

    /// Record a check with the given margin (`>= 0` passes).
    fn record(&mut self, margin: f64, lags: &[usize], lhs: f64, rhs: f64) {
        self.checks += 1;
        if margin < self.worst || self.witness.is_none() {
            self.worst = margin;
            self.witness = Some(Witness {
                lags: lags.to_vec(),
                lhs,
                rhs,
            });
        }
    }

    /// `lhs >= rhs` up to the inequality slack.
    fn geq(&mut self, lhs: f64, rhs: f64, lags: &[usize]) {
        self.record(lhs - rhs + INEQUALITY_SLACK, lags, lhs, rhs);
    }

    fn finish(self) -> RelationResult {
        RelationResult {
            relation: self.relation,
            pass: self.worst >= 0.0,
            worst_margin: if self.checks == 0 { 0.0 } else { self.worst },
            checks: self.checks,
            witness: self.witness,
        }
    }
}

/// Check every covariance relation on a finite chain for a centered `g`.
///
/// Covariances come from the spectral decomposition; the conditional-product
/// relation compares them with `<P^k g, P^j g>_pi` from repeated
/// multiplication by `P`. Its tolerance is `1e-10 max(1, Var g)`.
pub fn verify_lemma_cov(chain: &FiniteReversibleChain, g: &[f64], max_lag: usize) -> Result<LemmaReport> {
    verify_lemma_cov_labeled(chain, g, max_lag, "chain", "g")
}

pub fn verify_lemma_cov_labeled(
    chain: &FiniteReversibleChain,
    g: &[f64],
    max_lag: usize,
    chain_id: &str,
    function_id: &str,
) -> Result<LemmaReport> {
    if max_lag < 4 {
        return Err(Error::Domain(format!("max_lag must be at least 4, got {max_lag}")));
    }
    // validates centering
    direct_lag_covariance(chain, g, 0)?;
    let dec = spectral_decompose(chain)?;
    let coef = dec.coefficients(g)?;
    let c: Vec<f64> = (0..=max_lag).map(|k| dec.lag_covariance(&coef, k)).collect();
    let n = max_lag;

    let mut r8 = Tracker::new(Relation::ConditionalProduct);
    let tol = EQUALITY_TOL * c[0].max(1.0);
    let half = n / 2;
    let pg: Vec<Vec<f64>> = (0..=half)
        .map(|k| conditional_expectation(chain, g, k))
        .collect::<Result<_>>()?;
    for k in 1..=half {
        for j in 1..=half {
            let lhs = chain.inner(&pg[k], &pg[j]);
            let rhs = c[k + j];
            r8.record(tol - (lhs - rhs).abs(), &[k, j], lhs, rhs);
        }
    }

    let mut r9 = Tracker::new(Relation::AdjacentPairSum);
    let mut k = 0;
    while 2 * k < n {
        r9.geq(c[2 * k] + c[2 * k + 1], 0.0, &[k]);
        k += 1;
    }

    let mut r10 = Tracker::new(Relation::EvenLagMonotone);
    for k in 0..=n / 2 {
        r10.geq(c[2 * k], 0.0, &[k, k]);
        for j in 0..=k {
            r10.geq(c[2 * j], c[2 * k], &[j, k]);
        }
    }

    let mut r11 = Tracker::new(Relation::DominatedByLagTwo);
    for k in 2..=n {
        r11.geq(c[2], c[k], &[2, k]);
    }

    let mut r12 = Tracker::new(Relation::TailSumNonnegative);
    let mut r13 = Tracker::new(Relation::TailSumMaximal);
    for l in 1..=n / 2 {
        let mut s = 0.0;
        let mut best = f64::NEG_INFINITY;
        let mut best_j = 2 * l;
        for j in 2 * l..=n {
            s += c[j];
            r12.geq(s, 0.0, &[l, j]);
            if s > best {
                best = s;
                best_j = j;
            }
        }
        r13.geq(s + c[2 * l], best, &[l, best_j, n]);
    }

    Ok(LemmaReport {
        chain_id: chain_id.to_string(),
        function_id: function_id.to_string(),
        max_lag,
        relations: vec![
            r8.finish(),
            r9.finish(),
            r10.finish(),
            r11.finish(),
            r12.finish(),
            r13.finish(),
        ],
    })
}

/// Largest `|spectral - matrix power|` covariance gap over lags `0..=max_lag`.
pub fn spectral_consistency(chain: &FiniteReversibleChain, g: &[f64], max_lag: usize) -> Result<f64> {
    let dec = spectral_decompose(chain)?;
    let coef = dec.coefficients(g)?;
    let mut worst = 0.0f64;
    for k in 0..=max_lag {
        let direct = direct_lag_covariance(chain, g, k)?;
        worst = worst.max((dec.lag_covariance(&coef, k) - direct).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteConfig {
    pub chains: usize,
    pub states_min: usize,
    pub states_max: usize,
    pub functions_per_chain: usize,
    pub max_lag: usize,
    pub seed: u64,
}

impl Default for LemmaSuiteConfig {
    fn default() -> Self {
        Self {
            chains: 200,
            states_min: 2,
            states_max: 12,
            functions_per_chain: 3,
            max_lag: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteReport {
    pub config: LemmaSuiteConfig,
    pub cases: usize,
    pub failures: usize,
    /// Worst margin per relation across all cases.
    pub worst_margins: Vec<(Relation, f64)>,
    /// Largest spectral vs matrix-power covariance gap, lags up to 50.
    pub spectral_max_gap: f64,
    /// Reports of failing cases only.
    pub failing: Vec<LemmaReport>,
}

impl LemmaSuiteReport {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

/// Random chains and random centered functions, all from `seed`: chain `i`
/// uses stream `2i`, its size and functions come from stream `2i + 1`.
pub fn suite_cases(cfg: &LemmaSuiteConfig) -> Result<Vec<(FiniteReversibleChain, Vec<Vec<f64>>)>> {
    if cfg.states_min < 2 || cfg.states_max < cfg.states_min || cfg.states_max > 50 {
        return Err(Error::Config(format!(
            "states range {}..{} must lie in 2..50",
            cfg.states_min, cfg.states_max
        )));
    }
    (0..cfg.chains as u64)
        .map(|i| {
            let mut aux = RngStream::new(cfg.seed, 2 * i + 1).rng();
            let s = aux.random_range(cfg.states_min..=cfg.states_max);
            let chain = random_reversible_chain(s, RngStream::new(cfg.seed, 2 * i))?;
            let fs = (0..cfg.functions_per_chain)
                .map(|_| {
                    let raw: Vec<f64> = (0..s).map(|_| aux.random_range(-1.0..1.0)).collect();
                    center(&chain, &raw)
                })
                .collect();
            Ok((chain, fs))
        })
        .collect()
}

pub fn run_lemma_suite(cfg: &LemmaSuiteConfig) -> Result<LemmaSuiteReport> {
    let cases = suite_cases(cfg)?;
    let mut worst: Vec<(Relation, f64)> = Relation::ALL.iter().map(|&r| (r, f64::INFINITY)).collect();
    let mut failing = Vec::new();
    let mut count = 0;
    let mut gap = 0.0f64;
    for (i, (chain, fs)) in cases.iter().enumerate() {
        for (j, g) in fs.iter().enumerate() {
            let rep = verify_lemma_cov_labeled(chain, g, cfg.max_lag, &format!("chain-{i}"), &format!("g-{j}"))?;
            for (slot, r) in worst.iter_mut().zip(&rep.relations) {
                slot.1 = slot.1.min(r.worst_margin);
            }
            gap = gap.max(spectral_consistency(chain, g, cfg.max_lag.max(50))?);
            count += 1;
            if !rep.pass() {
                failing.push(rep);
            }
        }
    }
    Ok(LemmaSuiteReport {
        config: cfg.clone(),
        cases: count,
        failures: failing.len(),
        worst_margins: worst,
        spectral_max_gap: gap,
        failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::build_finite_chain;

    #[test]
    fn negative_eigenvalue_chain() {
        let c = build_finite_chain(vec![-1.0, 1.0], vec![vec![0.25, 0.75], vec![0.75, 0.25]]).unwrap();
        let rep = verify_lemma_cov(&c, c.values(), 10).unwrap();
        assert!(rep.pass(), "{rep:?}");
        let r9 = rep.relation(Relation::AdjacentPairSum);
        assert!(r9.checks >= 5);
    }

    #[test]
    fn independent_chain_passes_with_equality() {
        let pi = [0.2, 0.5, 0.3];
        let rows = vec![pi.to_vec(), pi.to_vec(), pi.to_vec()];
        let c = build_finite_chain(vec![0.0, 1.0, 2.0], rows).unwrap();
        let g = center(&c, c.values());
        let rep = verify_lemma_cov(&c, &g, 8).unwrap();
        assert!(rep.pass());
        let r12 = rep.relation(Relation::TailSumNonnegative);
        assert!((r12.worst_margin - INEQUALITY_SLACK).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let c = build_finite_chain(vec![0.0, 1.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            verify_lemma_cov(&c, &[0.0, 1.0], 10),
            Err(Error::NotCentered { .. })
        ));
        assert!(verify_lemma_cov(&c, &[-0.5, 0.5], 3).is_err());
    }

    #[test]
    fn small_suite() {
        let cfg = LemmaSuiteConfig {
            chains: 10,
            ..LemmaSuiteConfig::default()
        };
        let rep = run_lemma_suite(&cfg).unwrap();
        assert_eq!(rep.cases, 30);
        assert!(rep.pass());
        assert!(rep.spectral_max_gap < 1e-10);
    }
}

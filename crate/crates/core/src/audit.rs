//! Certification of channels against privacy matrices.
//!
//! For a finite output alphabet the supremum of `Q(S|x) / Q(S|x')` over
//! output subsets is attained at a singleton (mediant inequality), so every
//! check here only inspects single outputs. The tests verify this against
//! brute force over all subsets.

use rayon::prelude::*;
use serde::Serialize;

use crate::budget::{extended_f64, Budget};
use crate::channel::{Channel, OutputLabel};
use crate::distribution::Distribution;
use crate::error::{check_index, check_len, invalid, Error, Result};
use crate::privacy::PrivacyMatrix;

/// Additive tolerance on attained budgets.
pub const AUDIT_TOL: f64 = 1e-9;

/// `ln(a / b)` with `0/0 -> 0` and `c/0 -> inf`.
#[inline]
pub fn log_ratio(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else if b <= 0.0 {
        f64::INFINITY
    } else {
        (a / b).ln()
    }
}

/// Tightest budget for the ordered pair `(x, x')`, with the output that
/// attains it.
fn pair_budget(q: &Channel, x: usize, xp: usize) -> (f64, usize) {
    let (a, b) = (q.row(x), q.row(xp));
    let mut best = (0.0, 0);
    for (y, (&qa, &qb)) in a.iter().zip(b).enumerate() {
        let r = log_ratio(qa, qb);
        if r > best.0 {
            best = (r, y);
            if r == f64::INFINITY {
                break;
            }
        }
    }
    best
}

/// Outcome of [`verify_eldp`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub ok: bool,
    pub attained: PrivacyMatrix,
    /// `(x, x', y)` with the largest `eps_hat - eps` among finite budgets.
    pub worst_pair: Option<(usize, usize, usize)>,
    /// `min (eps - eps_hat)` over finite budgets, `inf` if there are none.
    #[serde(with = "extended_f64")]
    pub slack: f64,
}

/// Checks `Q(y|x) <= e^{eps_{x,x'}} Q(y|x')` for every pair and output.
pub fn verify_eldp(q: &Channel, e: &PrivacyMatrix) -> Result<AuditReport> {
    check_len(e.k(), q.k_in())?;
    let k = q.k_in();
    let rows: Vec<Vec<(f64, usize)>> = (0..k)
        .into_par_iter()
        .map(|x| {
            (0..k)
                .map(|xp| if x == xp { (0.0, 0) } else { pair_budget(q, x, xp) })
                .collect()
        })
        .collect();

    let mut slack = f64::INFINITY;
    let mut worst_pair = None;
    let mut ok = true;
    for (x, row) in rows.iter().enumerate() {
        for (xp, &(hat, y)) in row.iter().enumerate() {
            if x == xp {
                continue;
            }
            if let Budget::Finite(eps) = e.get(x, xp) {
                let gap = eps - hat;
                if gap < slack {
                    slack = gap;
                    worst_pair = Some((x, xp, y));
                }
                if hat > eps + AUDIT_TOL {
                    ok = false;
                }
            }
        }
    }
    let attained = PrivacyMatrix::from_fn(k, |x, xp| to_budget(rows[x][xp].0));
    Ok(AuditReport {
        ok,
        attained,
        worst_pair,
        slack,
    })
}

fn to_budget(v: f64) -> Budget {
    if v.is_finite() {
        Budget::Finite(v)
    } else {
        Budget::Unbounded
    }
}

/// The tightest `E` for which `q` is `E`-LDP.
pub fn attained_privacy(q: &Channel) -> PrivacyMatrix {
    let k = q.k_in();
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|x| {
            (0..k)
                .map(|xp| if x == xp { 0.0 } else { pair_budget(q, x, xp).0 })
                .collect()
        })
        .collect();
    PrivacyMatrix::from_fn(k, |x, xp| to_budget(rows[x][xp]))
}

/// Achievable `(P_FA, P_MD)` pairs for testing between two inputs with
/// budgets `eps12 = eps_{1,2}` and `eps21 = eps_{2,1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorRegion {
    pub eps12: f64,
    pub eps21: f64,
    pub vertices: [(f64, f64); 3],
}

impl ErrorRegion {
    /// Whether `(p_fa, p_md)` satisfies both testing inequalities.
    pub fn contains(&self, p_fa: f64, p_md: f64) -> bool {
        let unit = |v: f64| (-AUDIT_TOL..=1.0 + AUDIT_TOL).contains(&v);
        unit(p_fa)
            && unit(p_md)
            && p_fa + self.eps21.exp() * p_md >= 1.0 - AUDIT_TOL
            && self.eps12.exp() * p_fa + p_md >= 1.0 - AUDIT_TOL
    }

    /// The corner achieved by reporting the output of the binary optimal
    /// channel as the decision.
    pub fn inner_vertex(&self) -> (f64, f64) {
        self.vertices[2]
    }
}

pub fn error_region(eps12: f64, eps21: f64) -> Result<ErrorRegion> {
    for eps in [eps12, eps21] {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(invalid(format!("budgets must be positive and finite, got {eps}")));
        }
    }
    let denom = (eps12 + eps21).exp_m1();
    let vertex = (eps21.exp_m1() / denom, eps12.exp_m1() / denom);
    Ok(ErrorRegion {
        eps12,
        eps21,
        vertices: [(1.0, 0.0), (0.0, 1.0), vertex],
    })
}

/// `(P_FA(x, x'), P_MD(x, x'))` for the rule "decide `x` iff `Y` in `set`".
pub fn testing_errors(q: &Channel, x: usize, xp: usize, set: &[usize]) -> Result<(f64, f64)> {
    let in_x = q.set_prob(x, set)?;
    let in_xp = q.set_prob(xp, set)?;
    Ok((in_xp, 1.0 - in_x))
}

/// Both testing inequalities for the rule "decide `x` iff `Y` in `set`",
/// evaluated at the attained budgets of `q`.
pub fn check_testing_inequalities(q: &Channel, x: usize, xp: usize, set: &[usize]) -> Result<(bool, bool)> {
    check_index(x, q.k_in())?;
    check_index(xp, q.k_in())?;
    let forward = to_budget(if x == xp { 0.0 } else { pair_budget(q, x, xp).0 });
    let backward = to_budget(if x == xp { 0.0 } else { pair_budget(q, xp, x).0 });
    testing_inequalities(q, x, xp, set, forward, backward)
}

/// As [`check_testing_inequalities`], with budgets taken from `e`.
pub fn check_testing_inequalities_with(
    q: &Channel,
    e: &PrivacyMatrix,
    x: usize,
    xp: usize,
    set: &[usize],
) -> Result<(bool, bool)> {
    check_len(e.k(), q.k_in())?;
    check_index(x, q.k_in())?;
    check_index(xp, q.k_in())?;
    testing_inequalities(q, x, xp, set, e.get(x, xp), e.get(xp, x))
}

fn testing_inequalities(
    q: &Channel,
    x: usize,
    xp: usize,
    set: &[usize],
    eps_x_xp: Budget,
    eps_xp_x: Budget,
) -> Result<(bool, bool)> {
    let (fa, md) = testing_errors(q, x, xp, set)?;
    let holds = |b: Budget, scaled: f64, other: f64| match b {
        Budget::Unbounded => true,
        Budget::Finite(eps) => other + eps.exp() * scaled >= 1.0 - AUDIT_TOL,
    };
    Ok((holds(eps_xp_x, md, fa), holds(eps_x_xp, fa, md)))
}

/// Non-adaptive composition, outputs `(y1, y2)` flattened as
/// `y1 * q2.k_out() + y2`.
pub fn compose(q1: &Channel, q2: &Channel) -> Result<Channel> {
    compose_adaptive(q1, &vec![q2.clone(); q1.k_out()])
}

/// Adaptive composition: `q2[y1]` is the second channel used after the
/// first release `y1`.
pub fn compose_adaptive(q1: &Channel, q2: &[Channel]) -> Result<Channel> {
    check_len(q1.k_out(), q2.len())?;
    let k = q1.k_in();
    let k2 = q2[0].k_out();
    for c in q2 {
        check_len(k, c.k_in())?;
        check_len(k2, c.k_out())?;
    }
    let k_out = q1.k_out() * k2;
    let mut entries = Vec::with_capacity(k * k_out);
    for x in 0..k {
        for (y1, c) in q2.iter().enumerate() {
            let p1 = q1.prob(x, y1);
            entries.extend(c.row(x).iter().map(|p2| p1 * p2));
        }
    }
    let labels = (0..q1.k_out())
        .flat_map(|y1| (0..k2).map(move |y2| OutputLabel { block: y1, index: y2 }))
        .collect();
    Channel::from_flat(k, k_out, entries)?.with_labels(labels)
}

/// `W o Q`: release `Y`, then pass it through `W`.
pub fn postprocess(q: &Channel, w: &Channel) -> Result<Channel> {
    check_len(q.k_out(), w.k_in())?;
    let mut entries = Vec::with_capacity(q.k_in() * w.k_out());
    for row in q.rows() {
        entries.extend(w.push_forward(row)?);
    }
    Channel::from_flat(q.k_in(), w.k_out(), entries)
}

/// Checks `P(x1|y) / P(x2|y) <= e^{eps_hat(x1, x2)} prior(x1) / prior(x2)`.
pub fn posterior_ratio_bound(q: &Channel, prior: &Distribution, x1: usize, x2: usize, y: usize) -> Result<bool> {
    check_len(q.k_in(), prior.k())?;
    check_index(x1, q.k_in())?;
    check_index(x2, q.k_in())?;
    check_index(y, q.k_out())?;
    if prior.prob(x2) <= 0.0 {
        return Err(invalid(format!("prior vanishes at {x2}")));
    }
    let denom = prior.prob(x2) * q.prob(x2, y);
    if denom <= 0.0 {
        return Err(Error::ZeroPosterior { y });
    }
    if x1 == x2 {
        return Ok(true);
    }
    let ratio = prior.prob(x1) * q.prob(x1, y) / denom;
    let eps = pair_budget(q, x1, x2).0;
    if eps == f64::INFINITY {
        return Ok(true);
    }
    let bound = eps.exp() * prior.prob(x1) / prior.prob(x2);
    Ok(ratio <= bound * (1.0 + AUDIT_TOL) + AUDIT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{mangat, warner};
    use proptest::prelude::*;

    fn random_channel(k_in: usize, k_out: usize, seed: u64, zeros: bool) -> Channel {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..k_in)
            .map(|_| {
                let mut r: Vec<f64> = (0..k_out)
                    .map(|_| {
                        if zeros && rng.gen_bool(0.2) {
                            0.0
                        } else {
                            rng.gen::<f64>() + 0.01
                        }
                    })
                    .collect();
                if r.iter().all(|v| *v == 0.0) {
                    r[0] = 1.0;
                }
                let t: f64 = r.iter().sum();
                r.iter().map(|v| v / t).collect()
            })
            .collect();
        Channel::new(rows).unwrap()
    }

    fn subset_max(q: &Channel, x: usize, xp: usize) -> f64 {
        let mut best: f64 = 0.0;
        for mask in 1u32..(1 << q.k_out()) {
            let set: Vec<usize> = (0..q.k_out()).filter(|y| mask >> y & 1 == 1).collect();
            best = best.max(log_ratio(q.set_prob(x, &set).unwrap(), q.set_prob(xp, &set).unwrap()));
        }
        best
    }

    #[test]
    fn warner_attains_exactly() {
        let eps = 0.9;
        let r = verify_eldp(&warner(eps).unwrap(), &PrivacyMatrix::uniform(2, eps).unwrap()).unwrap();
        assert!(r.ok);
        assert!((r.attained.get(0, 1).value() - eps).abs() < 1e-12);
        assert!(r.slack.abs() < 1e-12);
    }

    #[test]
    fn mangat_unbounded_direction() {
        let eps = 1.2;
        let q = mangat(eps).unwrap();
        let e = PrivacyMatrix::from_rows(vec![
            vec![Budget::ZERO, Budget::Unbounded],
            vec![Budget::Finite(eps), Budget::ZERO],
        ])
        .unwrap();
        let r = verify_eldp(&q, &e).unwrap();
        assert!(r.ok);
        assert_eq!(r.attained.get(0, 1), Budget::Unbounded);
        assert!((r.attained.get(1, 0).value() - eps).abs() < 1e-12);
    }

    #[test]
    fn identity_fails() {
        let r = verify_eldp(&Channel::identity(2).unwrap(), &PrivacyMatrix::uniform(2, 1.0).unwrap()).unwrap();
        assert!(!r.ok);
        assert_eq!(r.slack, f64::NEG_INFINITY);
        assert!(r.worst_pair.is_some());
        assert!(verify_eldp(&Channel::identity(3).unwrap(), &PrivacyMatrix::uniform(2, 1.0).unwrap()).is_err());
    }

    #[test]
    fn constant_rows_attain_zero() {
        let q = Channel::constant(4, &[0.1, 0.2, 0.7]).unwrap();
        let e = attained_privacy(&q);
        for x in 0..4 {
            for xp in 0..4 {
                assert_eq!(e.get(x, xp), Budget::ZERO);
            }
        }
    }

    #[test]
    fn attained_is_tight() {
        for seed in 0..20 {
            let q = random_channel(4, 5, seed, true);
            let r = verify_eldp(&q, &attained_privacy(&q)).unwrap();
            assert!(r.ok);
            assert!(r.slack == f64::INFINITY || r.slack.abs() < 1e-12);
        }
    }

    #[test]
    fn singletons_match_subsets() {
        for seed in 0..40 {
            let k_out = 2 + (seed as usize % 7);
            let q = random_channel(3, k_out, seed, seed % 2 == 0);
            let e = attained_privacy(&q);
            for x in 0..3 {
                for xp in 0..3 {
                    if x != xp {
                        let brute = subset_max(&q, x, xp);
                        let got = e.get(x, xp).value();
                        assert!(brute == got || (brute - got).abs() < 1e-12, "{brute} vs {got}");
                    }
                }
            }
        }
    }

    #[test]
    fn error_region_vertices() {
        let eps: f64 = 0.8;
        let r = error_region(eps, eps).unwrap();
        let v = 1.0 / (1.0 + eps.exp());
        assert!((r.inner_vertex().0 - v).abs() < 1e-15 && (r.inner_vertex().1 - v).abs() < 1e-15);
        let r = error_region(2f64.ln(), 4f64.ln()).unwrap();
        assert!((r.inner_vertex().0 - 3.0 / 7.0).abs() < 1e-15);
        assert!((r.inner_vertex().1 - 1.0 / 7.0).abs() < 1e-15);
        for v in r.vertices {
            assert!(r.contains(v.0, v.1));
        }
        assert!(!r.contains(0.1, 0.1));
        assert!(error_region(0.0, 1.0).is_err());
        assert!(error_region(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn testing_rules_on_warner() {
        let q = warner(1.1).unwrap();
        let (fa, md) = testing_errors(&q, 0, 1, &[0, 1]).unwrap();
        assert!((fa - 1.0).abs() < 1e-15 && md.abs() < 1e-15);
        assert_eq!(testing_errors(&q, 0, 1, &[]).unwrap(), (0.0, 1.0));
        assert_eq!(check_testing_inequalities(&q, 0, 1, &[0, 1]).unwrap(), (true, true));
        assert_eq!(check_testing_inequalities(&q, 0, 1, &[]).unwrap(), (true, true));
        assert_eq!(check_testing_inequalities(&q, 0, 1, &[0]).unwrap(), (true, true));
        let (fa, md) = testing_errors(&q, 0, 1, &[0]).unwrap();
        assert!((fa + 1.1f64.exp() * md - 1.0).abs() < 1e-12);
        // A tighter budget than attained must fail.
        let tight = PrivacyMatrix::uniform(2, 0.5).unwrap();
        assert_eq!(
            check_testing_inequalities_with(&q, &tight, 0, 1, &[0]).unwrap(),
            (false, false)
        );
    }

    #[test]
    fn composition_of_warners() {
        let eps = 0.7;
        let q = warner(eps).unwrap();
        let c = compose(&q, &q).unwrap();
        assert_eq!(c.k_out(), 4);
        let e = attained_privacy(&c);
        assert!((e.get(0, 1).value() - 2.0 * eps).abs() < 1e-12);
        let flat = Channel::constant(2, &[0.3, 0.7]).unwrap();
        let c = compose(&q, &flat).unwrap();
        assert!((attained_privacy(&c).get(1, 0).value() - eps).abs() < 1e-12);
        assert!((c.prob(0, 1) - q.prob(0, 0) * 0.7).abs() < 1e-15);
    }

    #[test]
    fn postprocess_basics() {
        let q = random_channel(3, 4, 5, false);
        assert_eq!(postprocess(&q, &Channel::identity(4).unwrap()).unwrap(), q);
        let flat = postprocess(&q, &Channel::constant(4, &[0.5, 0.5]).unwrap()).unwrap();
        assert!(attained_privacy(&flat)
            .sum(&attained_privacy(&flat))
            .unwrap()
            .dominated_by(&PrivacyMatrix::from_fn(3, |_, _| Budget::ZERO), 1e-12));
        assert!(postprocess(&q, &Channel::identity(3).unwrap()).is_err());
    }

    #[test]
    fn posterior_bound_examples() {
        let q = warner(1.0).unwrap();
        let prior = Distribution::uniform(2).unwrap();
        for y in 0..2 {
            assert!(posterior_ratio_bound(&q, &prior, 0, 1, y).unwrap());
            assert!(posterior_ratio_bound(&q, &prior, 1, 1, y).unwrap());
        }
        let id = Channel::identity(2).unwrap();
        assert!(matches!(
            posterior_ratio_bound(&id, &prior, 0, 1, 0),
            Err(Error::ZeroPosterior { y: 0 })
        ));
        let skewed = Distribution::new(vec![1.0, 0.0]).unwrap();
        assert!(posterior_ratio_bound(&q, &skewed, 1, 0, 0).unwrap());
        assert!(posterior_ratio_bound(&q, &skewed, 0, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn postprocess_never_increases(seed in any::<u64>(), k_out in 2usize..6, k_w in 1usize..5) {
            let q = random_channel(3, k_out, seed, true);
            let w = random_channel(k_out, k_w, seed ^ 0xABCD, true);
            let before = attained_privacy(&q);
            let after = attained_privacy(&postprocess(&q, &w).unwrap());
            prop_assert!(after.dominated_by(&before, 1e-9));
        }

        #[test]
        fn composition_budget_adds(seed in any::<u64>()) {
            let q1 = random_channel(3, 3, seed, true);
            let q2 = random_channel(3, 2, seed.wrapping_add(1), true);
            let bound = attained_privacy(&q1).sum(&attained_privacy(&q2)).unwrap();
            prop_assert!(attained_privacy(&compose(&q1, &q2).unwrap()).dominated_by(&bound, 1e-9));
        }
    }
}

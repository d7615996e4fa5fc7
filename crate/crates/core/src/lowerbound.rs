//! Lower-bound diagnostics: packing families around the uniform
//! distribution, the averaged chi-square functional, and numerical checks
//! of the inequalities bounding it.
//!
//! A family is `p_z = u + sum_b z_b * d_b` over sign vectors `z`, where each
//! direction `d_b` is sparse. Exhaustive evaluation walks `z` in Gray-code
//! order so each step updates one direction.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::audit::verify_eldp;
use crate::channel::Channel;
use crate::distribution::Distribution;
use crate::error::{check_len, invalid, Error, Result};
use crate::partition::{Partition, SensitiveSet};
use crate::privacy::PrivacyMatrix;
use crate::seed::rng_for;

/// Largest family enumerated exactly.
pub const ENUMERATION_CAP_LOG2: u32 = 20;

const CHECK_TOL: f64 = 1e-9;
/// Slack for member feasibility (coordinates may round slightly below 0).
const FEASIBLE_TOL: f64 = 1e-12;

/// Binary entropy in bits.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PackingFamily {
    k: usize,
    alpha: f64,
    /// One sparse direction per sign bit.
    directions: Vec<Vec<(usize, f64)>>,
    log2_size: f64,
    c_alpha_log2: f64,
    rejected: f64,
}

impl PackingFamily {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn bits(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[Vec<(usize, f64)>] {
        &self.directions
    }

    /// `log2` of the number of feasible members.
    pub fn log2_size(&self) -> f64 {
        self.log2_size
    }

    /// Upper bound on `log2 C_alpha`.
    pub fn c_alpha_log2(&self) -> f64 {
        self.c_alpha_log2
    }

    /// Sign vectors whose member leaves the simplex.
    pub fn rejected(&self) -> f64 {
        self.rejected
    }

    /// Bit `b` of `z` set means `z_b = -1`.
    pub fn sign(z: u64, b: usize) -> f64 {
        if z >> b & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Raw member weights; may contain negative entries if infeasible.
    pub fn member_weights(&self, z: u64) -> Vec<f64> {
        let mut w = vec![1.0 / self.k as f64; self.k];
        for (b, dir) in self.directions.iter().enumerate() {
            let s = Self::sign(z, b);
            for &(i, v) in dir {
                w[i] += s * v;
            }
        }
        w
    }

    /// The member for `z`, or `None` if it is rejected.
    pub fn member(&self, z: u64) -> Option<Distribution> {
        let w = self.member_weights(z);
        if w.iter().any(|v| *v < -FEASIBLE_TOL) {
            return None;
        }
        Distribution::new(w.into_iter().map(|v| v.max(0.0)).collect()).ok()
    }
}

/// High-low family over the `k' = k - s` non-sensitive symbols:
/// `p_z(s+i) = 1/k + alpha z_i / k'`, `p_z(0) = 1/k - alpha sum(z) / k'`,
/// and the remaining sensitive symbols stay at `1/k`.
pub fn hl_packing(a: &SensitiveSet, alpha: f64) -> Result<PackingFamily> {
    let (k, s) = (a.k(), a.s());
    if s == 0 || 2 * s >= k {
        return Err(invalid(format!(
            "high-low packing needs 1 <= s < k/2, got s = {s}, k = {k}"
        )));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    let kp = k - s;
    let kf = k as f64;
    if alpha > kp as f64 / kf * (1.0 + FEASIBLE_TOL) {
        return Err(Error::InfeasiblePacking(format!(
            "alpha = {alpha} exceeds k'/k = {}; every member leaves the simplex",
            kp as f64 / kf
        )));
    }
    let step = alpha / kp as f64;
    let directions = (0..kp).map(|i| vec![(s + i, step), (0, -step)]).collect();
    // z with m minus signs has sum(z) = k' - 2m; coordinate 0 needs
    // alpha (k' - 2m) / k' <= 1/k.
    let mut rejected = 0.0;
    let mut log_binom = 0.0f64;
    for m in 0..=kp {
        if m > 0 {
            log_binom += ((kp - m + 1) as f64 / m as f64).ln();
        }
        if step * (kp as f64 - 2.0 * m as f64) > 1.0 / kf + FEASIBLE_TOL {
            rejected += log_binom.exp();
        }
    }
    let total = 2f64.powi(kp as i32);
    Ok(PackingFamily {
        k,
        alpha,
        directions,
        log2_size: (total - rejected).log2(),
        c_alpha_log2: (1.0 - binary_entropy(1.0 / 3.0)) * kp as f64,
        rejected,
    })
}

/// Effective even block sizes `2 floor(k_j / 2)`.
pub fn effective_sizes(partition: &Partition) -> Vec<usize> {
    partition.sizes().into_iter().map(|kj| kj / 2 * 2).collect()
}

/// Block family: within block `j`, consecutive members are paired and
/// moved by `+- 2 k_j alpha / sum_t k_t^2` in opposite directions. An odd
/// block drops its last member, and all sizes in the formula are the
/// effective even sizes.
pub fn bs_packing(partition: &Partition, alpha: f64) -> Result<PackingFamily> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    let k = partition.k();
    let eff = effective_sizes(partition);
    let sum_sq: usize = eff.iter().map(|v| v * v).sum();
    if sum_sq == 0 {
        return Err(Error::InfeasiblePacking("every block has a single member".into()));
    }
    let mut directions = Vec::new();
    for (j, &kj) in eff.iter().enumerate() {
        let delta = 2.0 * kj as f64 * alpha / sum_sq as f64;
        if delta > 1.0 / k as f64 * (1.0 + FEASIBLE_TOL) {
            return Err(Error::InfeasiblePacking(format!(
                "alpha = {alpha} moves block {j} by {delta} > 1/k"
            )));
        }
        let members = partition.members(j);
        for pair in members[..kj].chunks_exact(2) {
            directions.push(vec![(pair[0], delta), (pair[1], -delta)]);
        }
    }
    let bits = directions.len();
    Ok(PackingFamily {
        k,
        alpha,
        directions,
        log2_size: bits as f64,
        c_alpha_log2: bits as f64 * binary_entropy(1.0 / 3.0),
        rejected: 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareReport {
    /// Mean of the member terms.
    pub value: f64,
    pub terms: Vec<f64>,
    pub members: u64,
    pub rejected: u64,
    /// Standard error of `value` when members were sampled.
    pub std_err: Option<f64>,
    /// Some output has zero probability under the uniform marginal but not
    /// under a member.
    pub unreachable_mass: bool,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
}

impl ChiSquareReport {
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self.slack = Some(bound - self.value);
        self
    }
}

/// Column contributions of each direction: `d_b^Q(y)`.
fn pushed_directions(q: &Channel, fam: &PackingFamily) -> Vec<Vec<(usize, f64)>> {
    fam.directions
        .iter()
        .map(|dir| {
            let mut acc = vec![0.0; q.k_out()];
            for &(i, v) in dir {
                for (a, p) in acc.iter_mut().zip(q.row(i)) {
                    *a += v * p;
                }
            }
            acc.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect()
        })
        .collect()
}

struct Walker<'a> {
    fam: &'a PackingFamily,
    pushed: &'a [Vec<(usize, f64)>],
    u_q: &'a [f64],
    weights: Vec<f64>,
    negatives: usize,
    diff: Vec<f64>,
}

impl<'a> Walker<'a> {
    fn new(fam: &'a PackingFamily, pushed: &'a [Vec<(usize, f64)>], u_q: &'a [f64], z: u64) -> Self {
        let weights = fam.member_weights(z);
        let negatives = weights.iter().filter(|v| **v < -FEASIBLE_TOL).count();
        let mut diff = vec![0.0; u_q.len()];
        for (b, col) in pushed.iter().enumerate() {
            let s = PackingFamily::sign(z, b);
            for &(y, v) in col {
                diff[y] += s * v;
            }
        }
        Walker {
            fam,
            pushed,
            u_q,
            weights,
            negatives,
            diff,
        }
    }

    /// Flips bit `b`, whose current sign is `from`.
    fn flip(&mut self, b: usize, from: f64) {
        let delta = -2.0 * from;
        for &(i, v) in &self.fam.directions[b] {
            let before = self.weights[i] < -FEASIBLE_TOL;
            self.weights[i] += delta * v;
            let after = self.weights[i] < -FEASIBLE_TOL;
            match (before, after) {
                (false, true) => self.negatives += 1,
                (true, false) => self.negatives -= 1,
                _ => {}
            }
        }
        for &(y, v) in &self.pushed[b] {
            self.diff[y] += delta * v;
        }
    }

    fn feasible(&self) -> bool {
        self.negatives == 0
    }

    /// `(d_chi2, unreachable)` for the current member.
    fn term(&self) -> (f64, bool) {
        let mut total = 0.0;
        let mut unreachable = false;
        for (d, u) in self.diff.iter().zip(self.u_q) {
            if *u > 0.0 {
                total += d * d / u;
            } else if d.abs() > FEASIBLE_TOL {
                unreachable = true;
            }
        }
        (total, unreachable)
    }
}

fn uniform_marginal(q: &Channel, k: usize) -> Result<Vec<f64>> {
    check_len(k, q.k_in())?;
    q.push_forward(&vec![1.0 / k as f64; k])
}

/// Exact chi-square functional over every feasible member.
pub fn chi_square(q: &Channel, fam: &PackingFamily) -> Result<ChiSquareReport> {
    let bits = fam.bits();
    if bits as u32 > ENUMERATION_CAP_LOG2 {
        return Err(Error::EnumerationTooLarge {
            members: 1u64.checked_shl(bits as u32).unwrap_or(u64::MAX),
            cap: 1 << ENUMERATION_CAP_LOG2,
        });
    }
    let u_q = uniform_marginal(q, fam.k)?;
    let pushed = pushed_directions(q, fam);
    // Independent Gray-code walks over the low bits, one per high prefix.
    let low = bits.min(12);
    let chunks = 1u64 << (bits - low);
    let parts: Vec<(Vec<f64>, u64, bool)> = (0..chunks)
        .into_par_iter()
        .map(|hi| {
            let base = hi << low;
            let mut w = Walker::new(fam, &pushed, &u_q, base);
            let mut gray = 0u64;
            let mut terms = Vec::with_capacity(1 << low);
            let mut rejected = 0;
            let mut unreachable = false;
            for step in 0..(1u64 << low) {
                if step > 0 {
                    let b = step.trailing_zeros() as usize;
                    let from = PackingFamily::sign(gray, b);
                    w.flip(b, from);
                    gray ^= 1 << b;
                }
                if w.feasible() {
                    let (t, un) = w.term();
                    terms.push(t);
                    unreachable |= un;
                } else {
                    rejected += 1;
                }
            }
            (terms, rejected, unreachable)
        })
        .collect();
    let mut terms = Vec::new();
    let mut rejected = 0;
    let mut unreachable = false;
    for (t, r, un) in parts {
        terms.extend(t);
        rejected += r;
        unreachable |= un;
    }
    if terms.is_empty() {
        return Err(Error::InfeasiblePacking("no feasible member".into()));
    }
    let value = terms.iter().sum::<f64>() / terms.len() as f64;
    Ok(ChiSquareReport {
        value,
        members: terms.len() as u64,
        terms,
        rejected,
        std_err: None,
        unreachable_mass: unreachable,
        bound: None,
        slack: None,
    })
}

/// Monte Carlo estimate over `samples` uniformly drawn sign vectors;
/// rejected draws are discarded.
pub fn chi_square_sampled(q: &Channel, fam: &PackingFamily, samples: usize, seed: u64) -> Result<ChiSquareReport> {
    if samples == 0 {
        return Err(invalid("samples must be at least 1"));
    }
    let u_q = uniform_marginal(q, fam.k)?;
    let pushed = pushed_directions(q, fam);
    let results: Vec<Option<(f64, bool)>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, &[i]);
            let mut diff = vec![0.0; u_q.len()];
            let mut weights = vec![1.0 / fam.k as f64; fam.k];
            for (b, col) in pushed.iter().enumerate() {
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                for &(y, v) in col {
                    diff[y] += s * v;
                }
                for &(x, v) in &fam.directions[b] {
                    weights[x] += s * v;
                }
            }
            if weights.iter().any(|v| *v < -FEASIBLE_TOL) {
                return None;
            }
            let mut total = 0.0;
            let mut unreachable = false;
            for (d, u) in diff.iter().zip(&u_q) {
                if *u > 0.0 {
                    total += d * d / u;
                } else if d.abs() > FEASIBLE_TOL {
                    unreachable = true;
                }
            }
            Some((total, unreachable))
        })
        .collect();
    let rejected = results.iter().filter(|r| r.is_none()).count() as u64;
    let kept: Vec<(f64, bool)> = results.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::InfeasiblePacking("no feasible member sampled".into()));
    }
    let terms: Vec<f64> = kept.iter().map(|t| t.0).collect();
    let n = terms.len() as f64;
    let value = terms.iter().sum::<f64>() / n;
    let std_err = if terms.len() > 1 {
        let var = terms.iter().map(|t| (t - value).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(ChiSquareReport {
        value,
        members: terms.len() as u64,
        terms,
        rejected,
        std_err: Some(std_err),
        unreachable_mass: kept.iter().any(|t| t.1),
        bound: None,
        slack: None,
    })
}

/// `(log2 |P| - log2 C_alpha) ln 2 / max_chi`, in samples.
pub fn sample_complexity_floor(fam: &PackingFamily, max_chi: f64) -> Result<f64> {
    if !(max_chi > 0.0) {
        return Err(invalid(format!("max_chi must be positive, got {max_chi}")));
    }
    Ok((fam.log2_size - fam.c_alpha_log2) * std::f64::consts::LN_2 / max_chi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim1Report {
    /// `sum_y sum_{i<k'} (Q(y|s+i) - Q(y|0))^2 / sum_j Q(y|j)`.
    pub lhs: f64,
    /// `sum_y (max_i Q(y|i) + (e^eps - 2) Q(y|0))`.
    pub chain: f64,
    /// `(e^eps - 1) + (1 - e^-eps) sum_t (1 - Q(M_t|0))`.
    pub partition_bound: f64,
    /// `(e^eps - 1) + k (1 - e^-eps)`.
    pub bound: f64,
    /// The subset inequality held for every argmax cell and row.
    pub subset_lemma: bool,
    pub ok: bool,
}

/// Verifies the chi-square norm bound for a high-low channel with
/// sensitive set `0..s`, step by step.
pub fn check_claim1(q: &Channel, s: usize, eps: f64) -> Result<Claim1Report> {
    let k = q.k_in();
    let a = SensitiveSet::new(k, s)?;
    if s == 0 || s >= k {
        return Err(invalid(format!("need 1 <= s < k, got s = {s}, k = {k}")));
    }
    let audit = verify_eldp(q, &PrivacyMatrix::high_low(&a, eps)?)?;
    if !audit.ok {
        return Err(Error::ConstraintViolated(format!(
            "channel is not high-low private at eps = {eps} (slack {})",
            audit.slack
        )));
    }
    let e = eps.exp();
    let mut lhs = 0.0;
    let mut chain = 0.0;
    // Q(M_t | i) for every cell t and row i.
    let mut cell_mass = vec![0.0; k * k];
    for y in 0..q.k_out() {
        let col: Vec<f64> = (0..k).map(|x| q.prob(x, y)).collect();
        let total: f64 = col.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let q0 = col[0];
        lhs += col[s..].iter().map(|v| (v - q0).powi(2)).sum::<f64>() / total;
        let (t, max) = col.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            },
        );
        chain += max + (e - 2.0) * q0;
        for (i, v) in col.iter().enumerate() {
            cell_mass[t * k + i] += v;
        }
    }
    let decay = -(-eps).exp_m1();
    let mut subset_lemma = true;
    let mut partition_bound = eps.exp_m1();
    for t in 0..k {
        let base = cell_mass[t * k];
        partition_bound += decay * (1.0 - base);
        let cap = 1.0 - (-eps).exp() * (1.0 - base);
        for i in 0..k {
            if cell_mass[t * k + i] > cap + CHECK_TOL {
                subset_lemma = false;
            }
        }
    }
    let bound = eps.exp_m1() + k as f64 * decay;
    let ok = subset_lemma
        && lhs <= chain + CHECK_TOL
        && chain <= partition_bound + CHECK_TOL
        && partition_bound <= bound + CHECK_TOL;
    Ok(Claim1Report {
        lhs,
        chain,
        partition_bound,
        bound,
        subset_lemma,
        ok,
    })
}

/// `k alpha^2 / k'^2 * lhs`: the exact functional of an unrejected high-low
/// family, and `4 alpha^2 / k * lhs`, its bound.
pub fn hl_chi_from_claim1(k: usize, s: usize, alpha: f64, lhs: f64) -> (f64, f64) {
    let kp = (k - s) as f64;
    (
        k as f64 * alpha * alpha / (kp * kp) * lhs,
        4.0 * alpha * alpha / k as f64 * lhs,
    )
}

/// `8 k alpha^2 (e^eps - 1)^2 / sum_t k_t^2` over effective sizes.
pub fn bs_chi_bound(partition: &Partition, alpha: f64, eps: f64) -> f64 {
    let sum_sq: usize = effective_sizes(partition).iter().map(|v| v * v).sum();
    8.0 * partition.k() as f64 * alpha * alpha * eps.exp_m1().powi(2) / sum_sq as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BsChiReport {
    pub chi: f64,
    pub bound: f64,
    pub members: u64,
    pub ok: bool,
}

/// Exact block-family functional against its analytic bound.
pub fn check_bs_chi_bound(q: &Channel, partition: &Partition, alpha: f64, eps: f64) -> Result<BsChiReport> {
    check_len(partition.k(), q.k_in())?;
    let audit = verify_eldp(q, &PrivacyMatrix::block_structured(partition, eps)?)?;
    if !audit.ok {
        return Err(Error::ConstraintViolated(format!(
            "channel is not block-structured private at eps = {eps} (slack {})",
            audit.slack
        )));
    }
    let fam = bs_packing(partition, alpha)?;
    let report = chi_square(q, &fam)?;
    let bound = bs_chi_bound(partition, alpha, eps);
    Ok(BsChiReport {
        chi: report.value,
        bound,
        members: report.members,
        ok: report.value <= bound * (1.0 + CHECK_TOL) + CHECK_TOL,
    })
}

/// Largest `alpha` for which [`bs_packing`] is feasible.
pub fn bs_max_alpha(partition: &Partition) -> Option<f64> {
    let eff = effective_sizes(partition);
    let sum_sq: usize = eff.iter().map(|v| v * v).sum();
    let max = *eff.iter().max()?;
    (max > 0).then(|| sum_sq as f64 / (2.0 * max as f64 * partition.k() as f64))
}

/// Termwise `(Q(y|a) - Q(y|b))^2 <= ((e^eps - 1) / k_j)^2 (sum_{i in block} Q(y|i))^2`
/// for every paired `(a, b)` in each block.
pub fn check_block_pair_inequality(q: &Channel, partition: &Partition, eps: f64) -> Result<bool> {
    check_len(partition.k(), q.k_in())?;
    let factor = eps.exp_m1();
    for j in 0..partition.num_blocks() {
        let members = partition.members(j);
        let kj = members.len() as f64;
        for y in 0..q.k_out() {
            let mass: f64 = members.iter().map(|&x| q.prob(x, y)).sum();
            let rhs = (factor / kj * mass).powi(2);
            for pair in members.chunks_exact(2) {
                let d = q.prob(pair[0], y) - q.prob(pair[1], y);
                if d * d > rhs * (1.0 + CHECK_TOL) + 1e-15 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// A random channel satisfying the high-low constraints for `0..s`.
///
/// Sensitive rows are a shared positive base tilted by factors in
/// `[1, e^{eps/3}]`; every other row mixes `e^{-eps}` times the columnwise
/// maximum of the sensitive rows with an arbitrary (possibly sparse) row.
pub fn random_hlldp_channel<R: Rng + ?Sized>(a: &SensitiveSet, eps: f64, k_out: usize, rng: &mut R) -> Result<Channel> {
    crate::mechanisms::check_eps(eps)?;
    if k_out == 0 || a.s() == 0 {
        return Err(invalid("need at least one output and one sensitive symbol"));
    }
    let tilt = eps / 3.0;
    let base: Vec<f64> = (0..k_out).map(|_| rng.gen::<f64>() + 0.05).collect();
    let mut rows: Vec<Vec<f64>> = (0..a.s())
        .map(|_| {
            let r: Vec<f64> = base.iter().map(|b| b * (rng.gen::<f64>() * tilt).exp()).collect();
            let t: f64 = r.iter().sum();
            r.into_iter().map(|v| v / t).collect()
        })
        .collect();
    let floor: Vec<f64> = (0..k_out)
        .map(|y| rows.iter().map(|r| r[y]).fold(0.0, f64::max) * (-eps).exp())
        .collect();
    let rest = 1.0 - floor.iter().sum::<f64>();
    for _ in a.s()..a.k() {
        let mut free: Vec<f64> = (0..k_out)
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen() })
            .collect();
        if free.iter().all(|v| *v == 0.0) {
            free[rng.gen_range(0..k_out)] = 1.0;
        }
        let t: f64 = free.iter().sum();
        rows.push(floor.iter().zip(&free).map(|(f, v)| f + rest * v / t).collect());
    }
    Channel::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::apply_channel;
    use crate::distribution::tv_distance;
    use crate::mechanisms::{bsldp_hr_channel, hlldp_hr_channel};

    fn direct_chi(q: &Channel, fam: &PackingFamily) -> f64 {
        let u = apply_channel(q, &Distribution::uniform(fam.k()).unwrap()).unwrap();
        let mut total = 0.0;
        let mut count = 0;
        for z in 0..(1u64 << fam.bits()) {
            if let Some(p) = fam.member(z) {
                let pq = apply_channel(q, &p).unwrap();
                total += pq
                    .weights()
                    .iter()
                    .zip(u.weights())
                    .filter(|(_, u)| **u > 0.0)
                    .map(|(a, b)| (a - b).powi(2) / b)
                    .sum::<f64>();
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn entropy_value() {
        let h = binary_entropy(1.0 / 3.0);
        assert!((h - 0.918_295_834_054_489_6).abs() < 1e-12);
        assert_eq!(binary_entropy(0.5), 1.0);
    }

    #[test]
    fn hl_family_example() {
        let fam = hl_packing(&SensitiveSet::new(6, 2).unwrap(), 0.05).unwrap();
        let p = fam.member(0).unwrap();
        let want = [
            1.0 / 6.0 - 0.05,
            1.0 / 6.0,
            1.0 / 6.0 + 0.0125,
            1.0 / 6.0 + 0.0125,
            1.0 / 6.0 + 0.0125,
            1.0 / 6.0 + 0.0125,
        ];
        for (a, b) in p.weights().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(fam.rejected(), 0.0);
        assert_eq!(fam.log2_size(), 4.0);
        // z and -z average to uniform.
        let neg = fam.member(0b1111).unwrap();
        for (a, b) in p.weights().iter().zip(neg.weights()) {
            assert!(((a + b) / 2.0 - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hl_family_rejection() {
        let a = SensitiveSet::new(6, 2).unwrap();
        // alpha in (1/k, k'/k]: members with large sum(z) are dropped.
        let fam = hl_packing(&a, 0.5).unwrap();
        let counted = (0..16u64).filter(|&z| fam.member(z).is_none()).count();
        assert_eq!(fam.rejected(), counted as f64);
        assert!(counted > 0 && counted < 16);
        assert!(matches!(hl_packing(&a, 0.7), Err(Error::InfeasiblePacking(_))));
        assert!(hl_packing(&SensitiveSet::new(6, 3).unwrap(), 0.01).is_err());
        let q = hlldp_hr_channel(&a, 1.0).unwrap();
        let r = chi_square(&q, &fam).unwrap();
        assert_eq!(r.rejected as usize, counted);
        assert!((r.value - direct_chi(&q, &fam)).abs() < 1e-10);
    }

    #[test]
    fn bs_family_examples() {
        let p = Partition::single(2).unwrap();
        let fam = bs_packing(&p, 0.1).unwrap();
        let m = fam.member(0).unwrap();
        assert!((m.prob(0) - 0.6).abs() < 1e-15 && (m.prob(1) - 0.4).abs() < 1e-15);
        let part = Partition::from_sizes(&[4, 3, 6]).unwrap();
        let alpha = bs_max_alpha(&part).unwrap();
        let fam = bs_packing(&part, alpha).unwrap();
        assert_eq!(fam.bits(), 2 + 1 + 3);
        let u = vec![1.0 / 13.0; 13];
        for z in 0..(1u64 << fam.bits()) {
            let m = fam.member(z).unwrap();
            assert!((tv_distance(m.weights(), &u).unwrap() - alpha).abs() < 1e-12);
            let flipped = fam.member(z ^ 0b100).unwrap();
            let changed = m
                .weights()
                .iter()
                .zip(flipped.weights())
                .filter(|(a, b)| a != b)
                .count();
            assert_eq!(changed, 2);
        }
        assert!(bs_packing(&part, alpha * 1.01).is_err());
        assert!(bs_packing(&Partition::from_sizes(&[1, 1]).unwrap(), 0.1).is_err());
    }

    #[test]
    fn chi_examples() {
        let fam = bs_packing(&Partition::single(2).unwrap(), 0.1).unwrap();
        let r = chi_square(&Channel::identity(2).unwrap(), &fam).unwrap();
        assert!((r.value - 0.04).abs() < 1e-15);
        assert!(r.terms.iter().all(|t| (t - 0.04).abs() < 1e-15));
        let flat = Channel::constant(2, &[0.5, 0.5]).unwrap();
        assert_eq!(chi_square(&flat, &fam).unwrap().value, 0.0);
        let big = bs_packing(&Partition::single(44).unwrap(), 0.001).unwrap();
        assert!(matches!(
            chi_square(&Channel::identity(44).unwrap(), &big),
            Err(Error::EnumerationTooLarge { .. })
        ));
        let sampled = chi_square_sampled(&Channel::identity(44).unwrap(), &big, 200, 3).unwrap();
        assert!(sampled.value > 0.0 && sampled.std_err.is_some());
    }

    #[test]
    fn chi_matches_direct_sum() {
        let part = Partition::from_sizes(&[5, 4, 2]).unwrap();
        let q = bsldp_hr_channel(&part, 1.0).unwrap();
        let fam = bs_packing(&part, 0.05).unwrap();
        let r = chi_square(&q, &fam).unwrap();
        assert!((r.value - direct_chi(&q, &fam)).abs() < 1e-10);
        let mean = r.terms.iter().sum::<f64>() / r.terms.len() as f64;
        assert!((mean - r.value).abs() < 1e-15);
        assert!(!r.unreachable_mass);

        let a = SensitiveSet::new(16, 2).unwrap();
        let hq = hlldp_hr_channel(&a, 0.7).unwrap();
        let fam = hl_packing(&a, 0.05).unwrap();
        let r = chi_square(&hq, &fam).unwrap();
        assert!((r.value - direct_chi(&hq, &fam)).abs() < 1e-10);
        // Without rejections the functional is exactly k alpha^2 / k'^2 * lhs.
        let claim = check_claim1(&hq, 2, 0.7).unwrap();
        let (exact, bound) = hl_chi_from_claim1(16, 2, 0.05, claim.lhs);
        assert!((r.value - exact).abs() < 1e-12);
        assert!(r.value <= bound);
    }

    #[test]
    fn floor_examples() {
        let fam = hl_packing(&SensitiveSet::new(14, 4).unwrap(), 0.01).unwrap();
        let h = binary_entropy(1.0 / 3.0);
        let f = sample_complexity_floor(&fam, 1.0).unwrap();
        assert!((f - h * 10.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!(sample_complexity_floor(&fam, 1e12).unwrap() < 1e-10);
        assert!(sample_complexity_floor(&fam, 0.0).is_err());
        let wide = hl_packing(&SensitiveSet::new(24, 4).unwrap(), 0.01).unwrap();
        assert!((sample_complexity_floor(&wide, 1.0).unwrap() - 2.0 * f).abs() < 1e-12);
    }

    #[test]
    fn claim1_examples() {
        let flat = Channel::constant(5, &[0.2, 0.8]).unwrap();
        let r = check_claim1(&flat, 1, 0.5).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.ok);
        let q = hlldp_hr_channel(&SensitiveSet::new(8, 2).unwrap(), 1.0).unwrap();
        let r = check_claim1(&q, 2, 1.0).unwrap();
        assert!(r.ok, "{r:?}");
        assert!(r.lhs <= r.bound);
        assert!(matches!(
            check_claim1(&Channel::identity(4).unwrap(), 1, 1.0),
            Err(Error::ConstraintViolated(_))
        ));
    }

    #[test]
    fn random_channels_respect_constraints() {
        let mut rng = rng_for(5, &[]);
        for k in 2..10 {
            let a = SensitiveSet::new(k, 1 + k / 3).unwrap();
            let q = random_hlldp_channel(&a, 0.8, 3 + k, &mut rng).unwrap();
            let e = PrivacyMatrix::high_low(&a, 0.8).unwrap();
            assert!(verify_eldp(&q, &e).unwrap().ok);
            assert!(check_claim1(&q, a.s(), 0.8).unwrap().ok);
        }
    }

    #[test]
    fn bs_bound_examples() {
        let part = Partition::from_sizes(&[4, 4]).unwrap();
        let q = bsldp_hr_channel(&part, 1.0).unwrap();
        let r = check_bs_chi_bound(&q, &part, 0.05, 1.0).unwrap();
        assert!(r.ok);
        assert_eq!(r.members, 16);
        let r2 = check_bs_chi_bound(&q, &part, 0.1, 1.0).unwrap();
        assert!((r2.bound / r.bound - 4.0).abs() < 1e-12);
        assert!((r2.chi / r.chi - 4.0).abs() < 1e-9);
        let flat = Channel::constant(8, &[0.5, 0.5]).unwrap();
        assert_eq!(check_bs_chi_bound(&flat, &part, 0.05, 1.0).unwrap().chi, 0.0);
        assert!(check_block_pair_inequality(&q, &part, 1.0).unwrap());
    }
}

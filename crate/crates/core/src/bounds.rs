//! k-producibility bounds on the QFI of fermionic mode systems and
//! entanglement-depth certification.
//!
//! For an occupation-weight observable `O = sum_m w(m) n_m`, the QFI of any
//! k-producible pure state decomposes block-wise, and Popoviciu's inequality
//! bounds each block's variance by its squared weight range over allowed
//! occupations. Maximizing over partitions (and, at fixed particle number,
//! over block occupations) yields certification thresholds: a state beating
//! the k-bound is at least (k+1)-partite mode entangled.
//!
//! Two routes are provided for every bound: the direct optimal construction
//! and an exhaustive search over partitions/occupations (`brute_force_*`),
//! tractable for |M| <= 8 and exact in rational arithmetic.

use crate::fock::FockVector;
use crate::{BoundScalar, Error, Result, Scalar};

/// Partition of the mode set into disjoint blocks of size at most `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
    pub k: usize,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, k: usize) -> Self {
        Partition { blocks, k }
    }

    pub fn n_modes(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn validate(&self, n_modes: usize) -> Result<()> {
        let mut seen = vec![false; n_modes];
        for block in &self.blocks {
            if block.len() > self.k {
                return Err(Error::InvalidArgument(format!(
                    "block of size {} exceeds k = {}",
                    block.len(),
                    self.k
                )));
            }
            for &m in block {
                if m >= n_modes || seen[m] {
                    return Err(Error::InvalidArgument(format!(
                        "mode {m} missing or repeated in partition"
                    )));
                }
                seen[m] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidArgument("partition does not cover all modes".into()));
        }
        Ok(())
    }
}

/// A computed QFI bound: the tight value from the optimal construction and
/// the closed-form expression reported alongside it.
#[derive(Debug, Clone)]
pub struct BoundResult<B> {
    pub k: usize,
    pub n: Option<usize>,
    /// Tight bound (equals the brute-force maximum over partitions and
    /// occupation allocations).
    pub value: B,
    /// Closed form: `(d k^2 + r^2) max|w|^2` (generic) or
    /// `(d k^2 + r^2)/4 (max w - min w)^2` (fixed N).
    pub closed_form: B,
    pub partition: Partition,
    pub occupations: Option<Vec<usize>>,
}

/// Certified entanglement depth: the largest refuted producibility plus one.
#[derive(Debug, Clone)]
pub struct CertificationResult<B> {
    pub f_q: B,
    pub thresholds: Vec<(usize, B)>,
    pub k_max_refuted: usize,
    pub depth: usize,
}

fn b_usize<B: BoundScalar>(n: usize) -> B {
    let mut acc = B::zero();
    for _ in 0..n {
        acc = acc + B::one();
    }
    acc
}

fn div_k(n_modes: usize, k: usize) -> (usize, usize) {
    (n_modes / k, n_modes % k)
}

/// Mode order by descending |w|, ties broken by mode index.
fn order_by_abs_desc<B: BoundScalar>(weights: &[B]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .abs()
            .partial_cmp(&weights[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    order
}

/// Mode order by descending signed w, ties broken by mode index.
fn order_by_signed_desc<B: BoundScalar>(weights: &[B]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));
    order
}

/// Popoviciu bound on the QFI for a given partition with unrestricted
/// occupations: `sum_j (sum_{m in M_j} |w(m)|)^2`.
pub fn popoviciu_block_bound<B: BoundScalar>(partition: &Partition, weights: &[B]) -> B {
    let mut total = B::zero();
    for block in &partition.blocks {
        let mut s = B::zero();
        for &m in block {
            s = s + weights[m].abs();
        }
        total = total + s.clone() * s;
    }
    total
}

/// Worst-case k-partition for unrestricted occupations: modes sorted by
/// descending |w| and chunked k at a time (remainder in a trailing block).
pub fn optimal_partition_generic<B: BoundScalar>(weights: &[B], k: usize) -> Partition {
    let order = order_by_abs_desc(weights);
    let blocks = order.chunks(k.max(1)).map(<[usize]>::to_vec).collect();
    Partition::new(blocks, k)
}

/// Bound on the QFI of any k-producible state (free particle number).
pub fn bound_generic<B: BoundScalar>(weights: &[B], k: usize) -> BoundResult<B> {
    let partition = optimal_partition_generic(weights, k);
    let value = popoviciu_block_bound(&partition, weights);
    let (d, r) = div_k(weights.len(), k);
    let max_abs = weights
        .iter()
        .map(|w| w.abs())
        .fold(B::zero(), |m, v| if v > m { v } else { m });
    let closed_form = (b_usize::<B>(d * k * k) + b_usize(r * r)) * max_abs.clone() * max_abs;
    BoundResult { k, n: None, value, closed_form, partition, occupations: None }
}

/// Worst-case k-partition at fixed particle number: pair the t-th largest
/// weight with the t-th smallest, chunk floor(k/2) pairs per block
/// (descending), leftover middle mode in its own trailing block. With `k = 1`
/// every block is a single mode.
pub fn optimal_partition_fixed_n<B: BoundScalar>(weights: &[B], k: usize) -> Partition {
    let order = order_by_signed_desc(weights);
    let n_modes = weights.len();
    let pairs_per_block = k / 2;
    if pairs_per_block == 0 {
        return Partition::new(order.iter().map(|&m| vec![m]).collect(), k);
    }
    let n_pairs = n_modes / 2;
    let mut blocks = Vec::new();
    let mut t = 0;
    while t < n_pairs {
        let take = pairs_per_block.min(n_pairs - t);
        let mut block: Vec<usize> = order[t..t + take].to_vec();
        block.extend_from_slice(&order[n_modes - t - take..n_modes - t]);
        blocks.push(block);
        t += take;
    }
    if n_modes % 2 == 1 {
        blocks.push(vec![order[n_pairs]]);
    }
    Partition::new(blocks, k)
}

/// Distribute `n` particles over the blocks: pass 1 fills each block to half
/// capacity front-to-back, pass 2 fills to full capacity back-to-front (the
/// trailing blocks contribute least, so they absorb the excess).
pub fn allocate_occupations(partition: &Partition, n: usize) -> Result<Vec<usize>> {
    let capacity = partition.n_modes();
    if n > capacity {
        return Err(Error::InvalidArgument(format!(
            "{n} particles exceed {capacity} modes"
        )));
    }
    let sizes: Vec<usize> = partition.blocks.iter().map(Vec::len).collect();
    let mut alloc = vec![0usize; sizes.len()];
    let mut remaining = n;
    for (a, &s) in alloc.iter_mut().zip(&sizes) {
        let take = remaining.min(s / 2);
        *a += take;
        remaining -= take;
    }
    if remaining > 0 {
        for (a, &s) in alloc.iter_mut().zip(&sizes).rev() {
            let take = remaining.min(s - *a);
            *a += take;
            remaining -= take;
        }
    }
    debug_assert_eq!(remaining, 0);
    Ok(alloc)
}

/// Weight range of one block at fixed occupation `n_j`: sum of the `n_j`
/// largest weights minus the sum of the `n_j` smallest.
fn block_range<B: BoundScalar>(block: &[usize], weights: &[B], n_j: usize) -> B {
    if n_j == 0 || n_j == block.len() {
        return B::zero();
    }
    let mut ws: Vec<B> = block.iter().map(|&m| weights[m].clone()).collect();
    ws.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut top = B::zero();
    for w in ws.iter().take(n_j) {
        top = top + w.clone();
    }
    let mut bottom = B::zero();
    for w in ws.iter().rev().take(n_j) {
        bottom = bottom + w.clone();
    }
    top - bottom
}

fn fixed_n_value<B: BoundScalar>(partition: &Partition, weights: &[B], alloc: &[usize]) -> B {
    let mut total = B::zero();
    for (block, &n_j) in partition.blocks.iter().zip(alloc) {
        let r = block_range(block, weights, n_j);
        total = total + r.clone() * r;
    }
    total
}

/// Bound on the QFI of any k-producible state with fixed total particle
/// number `n`.
pub fn bound_fixed_n<B: BoundScalar>(weights: &[B], k: usize, n: usize) -> Result<BoundResult<B>> {
    if n > weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{n} particles exceed {} modes",
            weights.len()
        )));
    }
    let partition = optimal_partition_fixed_n(weights, k);
    let occupations = allocate_occupations(&partition, n)?;
    let value = fixed_n_value(&partition, weights, &occupations);
    let (d, r) = div_k(weights.len(), k);
    let (mut w_max, mut w_min) = (weights[0].clone(), weights[0].clone());
    for w in weights.iter() {
        if *w > w_max {
            w_max = w.clone();
        }
        if *w < w_min {
            w_min = w.clone();
        }
    }
    let range = w_max - w_min;
    let four = b_usize::<B>(4);
    let closed_form = (b_usize::<B>(d * k * k) + b_usize(r * r)) * range.clone() * range / four;
    Ok(BoundResult {
        k,
        n: Some(n),
        value,
        closed_form,
        partition,
        occupations: Some(occupations),
    })
}

/// Thresholds for every `k` and the certified entanglement depth: the bound
/// family is fixed-N when the particle number is known, generic otherwise.
/// Refutation is by strict inequality `F_Q > bound(k)`.
pub fn certify_depth<B: BoundScalar>(
    f_q: B,
    weights: &[B],
    n: Option<usize>,
) -> Result<CertificationResult<B>> {
    if f_q < B::zero() {
        return Err(Error::InvalidArgument("QFI must be non-negative".into()));
    }
    let n_modes = weights.len();
    let mut thresholds = Vec::with_capacity(n_modes);
    let mut k_max_refuted = 0;
    for k in 1..=n_modes {
        let bound = match n {
            Some(n) => bound_fixed_n(weights, k, n)?.value,
            None => bound_generic(weights, k).value,
        };
        if f_q > bound {
            k_max_refuted = k;
        }
        thresholds.push((k, bound));
    }
    Ok(CertificationResult { f_q, thresholds, k_max_refuted, depth: k_max_refuted + 1 })
}

/// Assemble a k-producible pure state: per block, a normalized amplitude
/// list over occupation patterns (absolute mode masks restricted to that
/// block). Blocks are applied to the vacuum right-to-left; creation
/// operators within a pattern are applied in descending mode order.
pub fn kproducible_state<T: Scalar>(
    partition: &Partition,
    block_amplitudes: &[Vec<(u64, T)>],
) -> Result<FockVector<T>> {
    if block_amplitudes.len() != partition.blocks.len() {
        return Err(Error::InvalidArgument(format!(
            "{} amplitude sets for {} blocks",
            block_amplitudes.len(),
            partition.blocks.len()
        )));
    }
    for (block, amps) in partition.blocks.iter().zip(block_amplitudes) {
        let block_mask: u64 = block.iter().map(|&m| 1u64 << m).sum();
        if amps.iter().any(|&(mask, _)| mask & !block_mask != 0) {
            return Err(Error::InvalidArgument(
                "occupation pattern leaves its block".into(),
            ));
        }
        let norm2 = amps.iter().map(|&(_, a)| a * a).fold(T::zero(), |s, v| s + v);
        if (norm2.sqrt() - T::one()).abs() > T::from_f64_c(1e-8) {
            return Err(Error::NotNormalized(
                (norm2.sqrt() - T::one()).abs().to_f64().unwrap_or(f64::NAN),
            ));
        }
    }
    let mut state = FockVector::vacuum();
    for (block, amps) in partition.blocks.iter().zip(block_amplitudes).rev() {
        let mut next = FockVector::default();
        for &(mask, amp) in amps {
            let mut term = state.clone();
            let mut modes: Vec<usize> = block.iter().copied().filter(|&m| mask >> m & 1 == 1).collect();
            modes.sort_unstable();
            for &m in modes.iter().rev() {
                term = term.create(m);
            }
            next = next.add_scaled(&term, amp);
        }
        state = next;
    }
    Ok(state.normalized())
}

/// Exhaustive maximum of the generic Popoviciu bound over all k-partitions.
pub fn brute_force_bound_generic<B: BoundScalar>(weights: &[B], k: usize) -> B {
    let mut best = B::zero();
    for_each_partition(weights.len(), k, &mut |blocks| {
        let p = Partition::new(blocks.to_vec(), k);
        let v = popoviciu_block_bound(&p, weights);
        if v > best {
            best = v;
        }
    });
    best
}

/// Exhaustive maximum of the fixed-N bound over all k-partitions and all
/// occupation allocations.
pub fn brute_force_bound_fixed_n<B: BoundScalar>(weights: &[B], k: usize, n: usize) -> B {
    let mut best = B::zero();
    for_each_partition(weights.len(), k, &mut |blocks| {
        let p = Partition::new(blocks.to_vec(), k);
        let sizes: Vec<usize> = p.blocks.iter().map(Vec::len).collect();
        for_each_allocation(&sizes, n, &mut |alloc| {
            let v = fixed_n_value(&p, weights, alloc);
            if v > best {
                best = v;
            }
        });
    });
    best
}

/// Enumerate set partitions of `0..n_modes` with block sizes at most `k`.
fn for_each_partition(n_modes: usize, k: usize, visit: &mut impl FnMut(&[Vec<usize>])) {
    fn rec(
        next: usize,
        n_modes: usize,
        k: usize,
        blocks: &mut Vec<Vec<usize>>,
        visit: &mut impl FnMut(&[Vec<usize>]),
    ) {
        if next == n_modes {
            visit(blocks);
            return;
        }
        for i in 0..blocks.len() {
            if blocks[i].len() < k {
                blocks[i].push(next);
                rec(next + 1, n_modes, k, blocks, visit);
                blocks[i].pop();
            }
        }
        blocks.push(vec![next]);
        rec(next + 1, n_modes, k, blocks, visit);
        blocks.pop();
    }
    let mut blocks = Vec::new();
    rec(0, n_modes, k.max(1), &mut blocks, visit);
}

/// Enumerate occupation allocations `n_j <= size_j`, `sum n_j = n`.
fn for_each_allocation(sizes: &[usize], n: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(
        sizes: &[usize],
        idx: usize,
        left: usize,
        alloc: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if idx == sizes.len() {
            if left == 0 {
                visit(alloc);
            }
            return;
        }
        let tail_capacity: usize = sizes[idx + 1..].iter().sum();
        for take in 0..=sizes[idx].min(left) {
            if left - take > tail_capacity {
                continue;
            }
            alloc.push(take);
            rec(sizes, idx + 1, left - take, alloc, visit);
            alloc.pop();
        }
    }
    let mut alloc = Vec::new();
    rec(sizes, 0, n, &mut alloc, visit);
}

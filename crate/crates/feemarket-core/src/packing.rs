//! Block builders' welfare maximization: choose transactions maximizing
//! profit (welfare net of fees) subject to the resource cap and exclusion
//! constraints.
//!
//! `solve_exact` is a branch-and-bound over binary inclusion with a
//! per-resource fractional-relaxation upper bound. Ties are broken toward
//! the lexicographically smallest list of chosen indices, so traces are
//! reproducible. `solve_greedy` is the scalable fallback for large mempools.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::{
    check_dim, validate_instance, BlockInstance, DimensionMismatch, InstanceReport, PriceVector,
    ResourceVector,
};

/// Largest mempool the exact solver accepts by default.
pub const DEFAULT_EXACT_LIMIT: usize = 24;

/// Result of a packing solve: inclusion vector, recomputed objective and
/// total resource usage.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingSolution {
    pub chosen: Vec<bool>,
    pub objective: f64,
    pub usage: ResourceVector,
}

impl PackingSolution {
    pub fn chosen_indices(&self) -> Vec<usize> {
        self.chosen
            .iter()
            .enumerate()
            .filter_map(|(j, &c)| c.then_some(j))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PackingError {
    /// Mempool larger than the exact-search threshold.
    TooLarge { txs: usize, limit: usize },
    Invalid(InstanceReport),
    Dimension(DimensionMismatch),
}

impl fmt::Display for PackingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooLarge { txs, limit } => write!(
                f,
                "instance too large for exact search: {txs} transactions, limit {limit}"
            ),
            Self::Invalid(report) => write!(f, "{report}"),
            Self::Dimension(d) => write!(f, "{d}"),
        }
    }
}

impl core::error::Error for PackingError {}

impl From<DimensionMismatch> for PackingError {
    fn from(d: DimensionMismatch) -> Self {
        Self::Dimension(d)
    }
}

impl From<InstanceReport> for PackingError {
    fn from(r: InstanceReport) -> Self {
        Self::Invalid(r)
    }
}

/// Preprocessed view used by both solvers.
struct Prepared {
    profits: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
    n: usize,
    m: usize,
}

fn prepare(inst: &BlockInstance, price: &PriceVector) -> Result<Prepared, PackingError> {
    validate_instance(inst)?;
    check_dim(inst.resources(), price.len())?;
    let n = inst.tx_count();
    let m = inst.resources();
    let profits: Vec<f64> = (0..n)
        .map(|j| inst.welfare()[j] - inst.consumption().column_dot(j, price.as_slice()))
        .collect();
    let mut adjacency = vec![Vec::new(); n];
    for (a, b) in inst.normalized_exclusions() {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    Ok(Prepared {
        profits,
        adjacency,
        n,
        m,
    })
}

fn finish(inst: &BlockInstance, prep: &Prepared, chosen_list: &[usize]) -> PackingSolution {
    let mut chosen = vec![false; prep.n];
    let mut objective = 0.0;
    let mut usage = vec![0.0; prep.m];
    for &j in chosen_list {
        chosen[j] = true;
        objective += prep.profits[j];
        for i in 0..prep.m {
            usage[i] += inst.consumption().entry(i, j);
        }
    }
    // usage stays in [0, b] because every inclusion was cap-checked
    let usage = ResourceVector::new(usage).expect("usage is nonnegative");
    PackingSolution {
        chosen,
        objective,
        usage,
    }
}

/// Exact maximizer of `(q - A'p)'x` over feasible binary inclusion vectors.
///
/// Among optimal solutions, the one whose ascending list of chosen indices is
/// lexicographically smallest is returned (so the empty block wins a tie
/// against any nonempty one, and lower transaction indices are preferred).
pub fn solve_exact(
    inst: &BlockInstance,
    price: &PriceVector,
) -> Result<PackingSolution, PackingError> {
    solve_exact_with_limit(inst, price, DEFAULT_EXACT_LIMIT)
}

pub fn solve_exact_with_limit(
    inst: &BlockInstance,
    price: &PriceVector,
    exact_limit: usize,
) -> Result<PackingSolution, PackingError> {
    let prep = prepare(inst, price)?;
    if prep.n > exact_limit {
        return Err(PackingError::TooLarge {
            txs: prep.n,
            limit: exact_limit,
        });
    }

    // Per-resource orders of positive-profit transactions by profit density,
    // used for the fractional-relaxation bound.
    let mut density_orders: Vec<Vec<usize>> = Vec::with_capacity(prep.m);
    for i in 0..prep.m {
        let mut idx: Vec<usize> = (0..prep.n).filter(|&j| prep.profits[j] > 0.0).collect();
        idx.sort_by(|&a, &b| {
            let da = density(prep.profits[a], inst.consumption().entry(i, a));
            let db = density(prep.profits[b], inst.consumption().entry(i, b));
            db.partial_cmp(&da).unwrap().then(a.cmp(&b))
        });
        density_orders.push(idx);
    }

    let mut search = Search {
        inst,
        prep: &prep,
        density_orders,
        best_objective: 0.0,
        best_list: Vec::new(),
        stack_list: Vec::new(),
        usage: vec![0.0; prep.m],
        saved_usage: vec![0.0; prep.n * prep.m],
        taken: vec![false; prep.n],
    };
    search.descend(0, 0.0);

    let list = search.best_list.clone();
    Ok(finish(inst, &prep, &list))
}

fn density(profit: f64, consumption: f64) -> f64 {
    if consumption == 0.0 {
        f64::INFINITY
    } else {
        profit / consumption
    }
}

struct Search<'a> {
    inst: &'a BlockInstance,
    prep: &'a Prepared,
    density_orders: Vec<Vec<usize>>,
    best_objective: f64,
    best_list: Vec<usize>,
    stack_list: Vec<usize>,
    usage: Vec<f64>,
    saved_usage: Vec<f64>,
    taken: Vec<bool>,
}

impl Search<'_> {
    fn descend(&mut self, depth: usize, profit: f64) {
        if depth == self.prep.n {
            let better = profit > self.best_objective
                || (profit == self.best_objective && self.stack_list < self.best_list);
            if better {
                self.best_objective = profit;
                self.best_list = self.stack_list.clone();
            }
            return;
        }
        // bound guard keeps exact ties alive so the lexicographic rule sees them
        let slack = 1e-9 * (1.0 + self.best_objective.abs());
        if self.upper_bound(depth, profit) < self.best_objective - slack {
            return;
        }
        if self.can_include(depth) {
            let m = self.prep.m;
            for i in 0..m {
                self.saved_usage[depth * m + i] = self.usage[i];
                self.usage[i] += self.inst.consumption().entry(i, depth);
            }
            self.taken[depth] = true;
            self.stack_list.push(depth);
            self.descend(depth + 1, profit + self.prep.profits[depth]);
            self.stack_list.pop();
            self.taken[depth] = false;
            for i in 0..m {
                self.usage[i] = self.saved_usage[depth * m + i];
            }
        }
        self.descend(depth + 1, profit);
    }

    fn can_include(&self, j: usize) -> bool {
        if self.prep.adjacency[j].iter().any(|&k| self.taken[k]) {
            return false;
        }
        for i in 0..self.prep.m {
            if self.usage[i] + self.inst.consumption().entry(i, j) > self.inst.limit()[i] {
                return false;
            }
        }
        true
    }

    /// Fractional single-resource knapsack bound, minimized over resources.
    /// Exclusions are dropped in the relaxation, so this never underestimates.
    fn upper_bound(&self, depth: usize, profit: f64) -> f64 {
        let mut bound = f64::INFINITY;
        for i in 0..self.prep.m {
            let mut cap = self.inst.limit()[i] - self.usage[i];
            let mut total = profit;
            for &j in &self.density_orders[i] {
                if j < depth {
                    continue;
                }
                let a = self.inst.consumption().entry(i, j);
                let r = self.prep.profits[j];
                if a <= cap {
                    total += r;
                    cap -= a;
                } else {
                    if cap > 0.0 {
                        total += r * cap / a;
                    }
                    break;
                }
            }
            bound = bound.min(total);
        }
        bound
    }
}

/// Greedy fallback: fill by descending profit per aggregate consumption,
/// skipping items that break a cap or an exclusion, then keep the better of
/// the greedy set and the most profitable single transaction. Never includes
/// a nonpositive-profit item, and its objective never exceeds the exact one.
pub fn solve_greedy(
    inst: &BlockInstance,
    price: &PriceVector,
) -> Result<PackingSolution, PackingError> {
    let prep = prepare(inst, price)?;
    let aggregate: Vec<f64> = (0..prep.n)
        .map(|j| (0..prep.m).map(|i| inst.consumption().entry(i, j)).sum())
        .collect();
    let mut candidates: Vec<usize> = (0..prep.n).filter(|&j| prep.profits[j] > 0.0).collect();
    candidates.sort_by(|&a, &b| {
        let ra = density(prep.profits[a], aggregate[a]);
        let rb = density(prep.profits[b], aggregate[b]);
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });

    let mut usage = vec![0.0; prep.m];
    let mut taken_flags = vec![false; prep.n];
    let mut taken: Vec<usize> = Vec::new();
    let mut total = 0.0;
    for &j in &candidates {
        if prep.adjacency[j].iter().any(|&k| taken_flags[k]) {
            continue;
        }
        let fits =
            (0..prep.m).all(|i| usage[i] + inst.consumption().entry(i, j) <= inst.limit()[i]);
        if !fits {
            continue;
        }
        for i in 0..prep.m {
            usage[i] += inst.consumption().entry(i, j);
        }
        taken_flags[j] = true;
        taken.push(j);
        total += prep.profits[j];
    }

    // classic density-greedy guarantee needs the best single item as a rival
    let best_single = candidates.iter().copied().max_by(|&a, &b| {
        prep.profits[a]
            .partial_cmp(&prep.profits[b])
            .unwrap()
            .then(b.cmp(&a))
    });
    if let Some(j) = best_single {
        if prep.profits[j] > total {
            taken = vec![j];
        }
    }
    taken.sort_unstable();
    Ok(finish(inst, &prep, &taken))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn rv(v: &[f64]) -> ResourceVector {
        ResourceVector::new(v.to_vec()).unwrap()
    }

    fn pv(v: &[f64]) -> PriceVector {
        PriceVector::new(v.to_vec()).unwrap()
    }

    /// Exhaustive enumeration with the same tie-break, used as the oracle.
    fn brute_force(inst: &BlockInstance, price: &PriceVector) -> (f64, Vec<usize>) {
        let n = inst.tx_count();
        let m = inst.resources();
        let profits: Vec<f64> = (0..n)
            .map(|j| inst.welfare()[j] - inst.consumption().column_dot(j, price.as_slice()))
            .collect();
        let pairs = inst.normalized_exclusions();
        let mut best = (0.0, Vec::new());
        'mask: for mask in 0u64..(1 << n) {
            for &(a, b) in &pairs {
                if mask & (1 << a) != 0 && mask & (1 << b) != 0 {
                    continue 'mask;
                }
            }
            let mut usage = vec![0.0; m];
            let mut value = 0.0;
            let mut list = Vec::new();
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    for i in 0..m {
                        usage[i] += inst.consumption().entry(i, j);
                    }
                    value += profits[j];
                    list.push(j);
                }
            }
            if (0..m).any(|i| usage[i] > inst.limit()[i]) {
                continue;
            }
            if value > best.0 || (value == best.0 && list < best.1) {
                best = (value, list);
            }
        }
        best
    }

    fn two_tx_instance() -> BlockInstance {
        BlockInstance::new(vec![3.0, 2.0], vec![vec![2.0, 1.0]], rv(&[2.0]), vec![]).unwrap()
    }

    #[test]
    fn exact_prefers_single_profitable_tx() {
        let inst = two_tx_instance();
        let sol = solve_exact(&inst, &pv(&[0.5])).unwrap();
        assert_eq!(sol.chosen, vec![true, false]);
        assert!((sol.objective - 2.0).abs() < 1e-15);
        assert_eq!(sol.usage.as_slice(), &[2.0]);
    }

    #[test]
    fn exact_empty_when_all_unprofitable() {
        let inst = two_tx_instance();
        let sol = solve_exact(&inst, &pv(&[10.0])).unwrap();
        assert_eq!(sol.chosen, vec![false, false]);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn exclusion_forces_lexicographic_choice() {
        let inst = BlockInstance::new(
            vec![5.0, 5.0],
            vec![vec![1.0, 1.0]],
            rv(&[2.0]),
            vec![(0, 1)],
        )
        .unwrap();
        let sol = solve_exact(&inst, &pv(&[0.0])).unwrap();
        assert_eq!(sol.chosen, vec![true, false]);
        assert!((sol.objective - 5.0).abs() < 1e-15);
    }

    #[test]
    fn greedy_matches_spec_examples() {
        let inst = two_tx_instance();
        // density order would pick tx 1 first, but the best-single rival wins
        let sol = solve_greedy(&inst, &pv(&[0.5])).unwrap();
        assert_eq!(sol.chosen, vec![true, false]);

        let single = BlockInstance::new(vec![2.0], vec![vec![1.0]], rv(&[2.0]), vec![]).unwrap();
        let sol = solve_greedy(&single, &pv(&[0.5])).unwrap();
        assert_eq!(sol.chosen, vec![true]);

        let sol = solve_greedy(&inst, &pv(&[10.0])).unwrap();
        assert_eq!(sol.chosen, vec![false, false]);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn too_large_is_an_error() {
        let n = 30;
        let inst =
            BlockInstance::new(vec![1.0; n], vec![vec![0.0; n]], rv(&[1.0]), vec![]).unwrap();
        assert!(matches!(
            solve_exact(&inst, &pv(&[0.0])),
            Err(PackingError::TooLarge { .. })
        ));
        assert!(solve_greedy(&inst, &pv(&[0.0])).is_ok());
    }

    fn random_instance(rng: &mut CounterRng, max_txs: usize, m: usize) -> BlockInstance {
        let n = rng.next_range(0, max_txs as u64) as usize;
        let limit: Vec<f64> = (0..m).map(|_| 0.5 + rng.next_f64() * 2.0).collect();
        let welfare: Vec<f64> = (0..n).map(|_| rng.next_f64() * 3.0).collect();
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..n).map(|_| rng.next_f64() * limit[i]).collect())
            .collect();
        let mut exclusions = Vec::new();
        if n >= 2 && rng.next_f64() < 0.5 {
            let a = rng.next_range(0, n as u64 - 1) as usize;
            let b = rng.next_range(0, n as u64 - 1) as usize;
            if a != b {
                exclusions.push((a, b));
            }
        }
        BlockInstance::new(welfare, rows, rv(&limit), exclusions).unwrap()
    }

    #[test]
    fn exact_matches_brute_force() {
        let mut rng = CounterRng::from_key(&[0xbb, 7]);
        for case in 0..200 {
            let m = 1 + (case % 3);
            let inst = random_instance(&mut rng, 10, m);
            let price: Vec<f64> = (0..m).map(|_| rng.next_f64() * 2.0).collect();
            let price = pv(&price);
            let sol = solve_exact(&inst, &price).unwrap();
            let (obj, list) = brute_force(&inst, &price);
            assert_eq!(sol.objective, obj, "case {case}");
            assert_eq!(sol.chosen_indices(), list, "case {case}");
        }
    }

    #[test]
    fn greedy_never_beats_exact_and_stays_feasible() {
        let mut rng = CounterRng::from_key(&[0xcc, 3]);
        for case in 0..200 {
            let m = 1 + (case % 2);
            let inst = random_instance(&mut rng, 12, m);
            let price: Vec<f64> = (0..m).map(|_| rng.next_f64() * 2.0).collect();
            let price = pv(&price);
            let exact = solve_exact(&inst, &price).unwrap();
            let greedy = solve_greedy(&inst, &price).unwrap();
            assert!(
                greedy.objective <= exact.objective + 1e-12,
                "case {case}: greedy {} > exact {}",
                greedy.objective,
                exact.objective
            );
            for i in 0..inst.resources() {
                assert!(greedy.usage[i] <= inst.limit()[i] + 1e-12);
                assert!(exact.usage[i] <= inst.limit()[i] + 1e-12);
            }
        }
    }

    #[test]
    fn objective_is_convex_and_monotone_in_price() {
        let mut rng = CounterRng::from_key(&[0xdd, 9]);
        for case in 0..100 {
            let m = 1 + (case % 2);
            let inst = random_instance(&mut rng, 8, m);
            let a: Vec<f64> = (0..m).map(|_| rng.next_f64() * 2.0).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.next_f64() * 2.0).collect();
            let lambda = rng.next_f64();
            let mid: Vec<f64> = (0..m)
                .map(|i| lambda * a[i] + (1.0 - lambda) * b[i])
                .collect();
            let fa = solve_exact(&inst, &pv(&a)).unwrap().objective;
            let fb = solve_exact(&inst, &pv(&b)).unwrap().objective;
            let fmid = solve_exact(&inst, &pv(&mid)).unwrap().objective;
            assert!(
                fmid <= lambda * fa + (1.0 - lambda) * fb + 1e-9,
                "case {case}: convexity violated"
            );

            // raising one coordinate never increases the objective
            let mut raised = a.clone();
            let coord = rng.next_range(0, m as u64 - 1) as usize;
            raised[coord] += rng.next_f64();
            let fraised = solve_exact(&inst, &pv(&raised)).unwrap().objective;
            assert!(fraised <= fa + 1e-9, "case {case}: monotonicity violated");
        }
    }
}

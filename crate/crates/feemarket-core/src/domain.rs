//! Shared domain types: resource quantities, prices, block instances and
//! per-block trace records, with the validation invariants every other
//! module relies on.
//!
//! The resource dimension `m` is fixed per simulation run. Every operation
//! that combines two vectors checks the dimensions and reports a mismatch
//! instead of broadcasting.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Inner-product helper. All dot products in the workspace go through this
/// so that identical inputs produce bit-identical sums regardless of caller.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

pub fn norm_l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_l2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Two vectors fed to one operation disagreed on the resource dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionMismatch {
    pub expected: usize,
    pub got: usize,
}

impl fmt::Display for DimensionMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dimension mismatch: expected {}, got {}",
            self.expected, self.got
        )
    }
}

impl core::error::Error for DimensionMismatch {}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<(), DimensionMismatch> {
    if expected == got {
        Ok(())
    } else {
        Err(DimensionMismatch { expected, got })
    }
}

/// Nonnegative m-vector of resource quantities (usage, targets, limits).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceVector(Vec<f64>);

/// The candidate vector failed the `ResourceVector` invariants.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorError {
    NotFinite { index: usize, value: f64 },
    Negative { index: usize, value: f64 },
}

impl fmt::Display for VectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotFinite { index, value } => {
                write!(f, "entry {index} is not finite ({value})")
            }
            Self::Negative { index, value } => {
                write!(f, "entry {index} is negative ({value})")
            }
        }
    }
}

impl core::error::Error for VectorError {}

impl ResourceVector {
    /// All entries must be finite and nonnegative.
    pub fn new(values: Vec<f64>) -> Result<Self, VectorError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(VectorError::NotFinite { index, value });
            }
            if value < 0.0 {
                return Err(VectorError::Negative { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(alloc::vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl core::ops::Index<usize> for ResourceVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// m-vector of per-resource prices. Finite entries; controllers only ever
/// produce nonnegative prices, but negative evaluation points are allowed
/// for experiments with projection disabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(values: Vec<f64>) -> Result<Self, VectorError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(VectorError::NotFinite { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(alloc::vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl core::ops::Index<usize> for PriceVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Dense m x n matrix of per-transaction resource consumption, row-major by
/// resource: row i holds how much of resource i each transaction uses.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionMatrix {
    resources: usize,
    txs: usize,
    data: Vec<f64>,
}

impl ConsumptionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, String> {
        let resources = rows.len();
        let txs = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(resources * txs);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != txs {
                return Err(alloc::format!(
                    "consumption row {i} has length {} but row 0 has length {txs}",
                    row.len()
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            resources,
            txs,
            data,
        })
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn txs(&self) -> usize {
        self.txs
    }

    pub fn entry(&self, resource: usize, tx: usize) -> f64 {
        self.data[resource * self.txs + tx]
    }

    /// Column of transaction `tx` as an owned m-vector.
    pub fn column(&self, tx: usize) -> Vec<f64> {
        (0..self.resources).map(|i| self.entry(i, tx)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.resources)
            .map(|i| self.data[i * self.txs..(i + 1) * self.txs].to_vec())
            .collect()
    }

    /// q_j - a_j . p for transaction `tx`, with the shared dot ordering.
    pub fn column_dot(&self, tx: usize, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.resources);
        let mut acc = 0.0;
        for i in 0..self.resources {
            acc += self.entry(i, tx) * p[i];
        }
        acc
    }
}

/// One block's market data: per-transaction welfare, consumption columns,
/// the per-block resource cap, and pairwise exclusion constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockInstanceRepr", into = "BlockInstanceRepr")]
pub struct BlockInstance {
    welfare: Vec<f64>,
    consumption: ConsumptionMatrix,
    limit: ResourceVector,
    exclusions: Vec<(usize, usize)>,
}

/// Wire form of `BlockInstance`: consumption as m arrays of length n_t,
/// row-major by resource; exclusions as zero-indexed `[j, j']` pairs.
#[derive(Serialize, Deserialize)]
struct BlockInstanceRepr {
    welfare: Vec<f64>,
    consumption: Vec<Vec<f64>>,
    limit: Vec<f64>,
    exclusions: Vec<(usize, usize)>,
}

impl TryFrom<BlockInstanceRepr> for BlockInstance {
    type Error = String;

    fn try_from(repr: BlockInstanceRepr) -> Result<Self, String> {
        let consumption = ConsumptionMatrix::from_rows(repr.consumption)?;
        if consumption.resources() != repr.limit.len() {
            return Err(alloc::format!(
                "consumption has {} resource rows but limit has {} entries",
                consumption.resources(),
                repr.limit.len()
            ));
        }
        if consumption.txs() != repr.welfare.len() {
            return Err(alloc::format!(
                "consumption has {} transaction columns but welfare has {} entries",
                consumption.txs(),
                repr.welfare.len()
            ));
        }
        let limit =
            ResourceVector::new(repr.limit).map_err(|e| alloc::format!("limit: {e}"))?;
        Ok(BlockInstance {
            welfare: repr.welfare,
            consumption,
            limit,
            exclusions: repr.exclusions,
        })
    }
}

impl From<BlockInstance> for BlockInstanceRepr {
    fn from(inst: BlockInstance) -> Self {
        BlockInstanceRepr {
            welfare: inst.welfare.clone(),
            consumption: inst.consumption.rows(),
            limit: inst.limit.as_slice().to_vec(),
            exclusions: inst.exclusions,
        }
    }
}

impl BlockInstance {
    /// Builds an instance from parts, checking shapes only. Semantic
    /// invariants are the business of [`validate_instance`].
    pub fn new(
        welfare: Vec<f64>,
        consumption_rows: Vec<Vec<f64>>,
        limit: ResourceVector,
        exclusions: Vec<(usize, usize)>,
    ) -> Result<Self, String> {
        let repr = BlockInstanceRepr {
            welfare,
            consumption: consumption_rows,
            limit: limit.as_slice().to_vec(),
            exclusions,
        };
        Self::try_from(repr)
    }

    pub fn resources(&self) -> usize {
        self.limit.len()
    }

    pub fn tx_count(&self) -> usize {
        self.welfare.len()
    }

    pub fn welfare(&self) -> &[f64] {
        &self.welfare
    }

    pub fn consumption(&self) -> &ConsumptionMatrix {
        &self.consumption
    }

    pub fn limit(&self) -> &ResourceVector {
        &self.limit
    }

    pub fn exclusions(&self) -> &[(usize, usize)] {
        &self.exclusions
    }

    /// Exclusion pairs normalized to `(lo, hi)` with duplicates removed.
    pub fn normalized_exclusions(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .exclusions
            .iter()
            .map(|&(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }
}

/// A single violated `BlockInstance` invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceViolation {
    /// Welfare entry is negative or not finite.
    BadWelfare { tx: usize, value: f64 },
    /// Consumption entry is negative or not finite.
    BadConsumption { resource: usize, tx: usize, value: f64 },
    /// A single transaction does not fit in an empty block.
    ColumnExceedsLimit { tx: usize, resource: usize },
    /// Exclusion pair (j, j) — the relation must be irreflexive.
    ReflexiveExclusion { tx: usize },
    /// Exclusion references a transaction index outside the mempool.
    ExclusionOutOfRange { pair: (usize, usize) },
    /// The instance has no resources at all.
    EmptyResourceDimension,
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadWelfare { tx, value } => {
                write!(f, "welfare of transaction {tx} is invalid ({value})")
            }
            Self::BadConsumption {
                resource,
                tx,
                value,
            } => write!(
                f,
                "consumption of resource {resource} by transaction {tx} is invalid ({value})"
            ),
            Self::ColumnExceedsLimit { tx, resource } => write!(
                f,
                "column exceeds limit: transaction {tx} over-consumes resource {resource}"
            ),
            Self::ReflexiveExclusion { tx } => {
                write!(f, "irreflexive violated: exclusion pair ({tx}, {tx})")
            }
            Self::ExclusionOutOfRange { pair } => write!(
                f,
                "exclusion pair ({}, {}) references a missing transaction",
                pair.0, pair.1
            ),
            Self::EmptyResourceDimension => write!(f, "instance has zero resources"),
        }
    }
}

/// Report listing every violated invariant of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceReport {
    pub violations: Vec<InstanceViolation>,
}

impl fmt::Display for InstanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid block instance:")?;
        for v in &self.violations {
            write!(f, " [{v}]")?;
        }
        Ok(())
    }
}

impl core::error::Error for InstanceReport {}

/// Total validation: `Ok(())` iff every invariant holds, otherwise a report
/// enumerating each violation.
pub fn validate_instance(inst: &BlockInstance) -> Result<(), InstanceReport> {
    let mut violations = Vec::new();
    let m = inst.resources();
    let n = inst.tx_count();
    if m == 0 {
        violations.push(InstanceViolation::EmptyResourceDimension);
    }
    for (tx, &q) in inst.welfare.iter().enumerate() {
        if !q.is_finite() || q < 0.0 {
            violations.push(InstanceViolation::BadWelfare { tx, value: q });
        }
    }
    for tx in 0..n {
        for resource in 0..m {
            let a = inst.consumption.entry(resource, tx);
            if !a.is_finite() || a < 0.0 {
                violations.push(InstanceViolation::BadConsumption {
                    resource,
                    tx,
                    value: a,
                });
                continue;
            }
            if a > inst.limit[resource] {
                violations.push(InstanceViolation::ColumnExceedsLimit { tx, resource });
            }
        }
    }
    for &(a, b) in &inst.exclusions {
        if a == b {
            violations.push(InstanceViolation::ReflexiveExclusion { tx: a });
        }
        if a >= n || b >= n {
            violations.push(InstanceViolation::ExclusionOutOfRange { pair: (a, b) });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(InstanceReport { violations })
    }
}

/// Per-block simulation output: posted price, packed transactions, realized
/// usage, supply response, subgradient and dual value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub block_height: u64,
    pub price: PriceVector,
    pub chosen: Vec<bool>,
    pub usage: ResourceVector,
    pub supply_opt: ResourceVector,
    pub gradient: Vec<f64>,
    pub dual_value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_tx_instance(column: Vec<f64>, limit: Vec<f64>) -> BlockInstance {
        let rows: Vec<Vec<f64>> = column.iter().map(|&a| alloc::vec![a]).collect();
        BlockInstance::new(
            alloc::vec![1.0],
            rows,
            ResourceVector::new(limit).unwrap(),
            alloc::vec![],
        )
        .unwrap()
    }

    #[test]
    fn column_at_limit_is_ok() {
        let inst = single_tx_instance(alloc::vec![2.0], alloc::vec![2.0]);
        assert!(validate_instance(&inst).is_ok());
    }

    #[test]
    fn column_over_limit_is_reported() {
        let inst = single_tx_instance(alloc::vec![3.0], alloc::vec![2.0]);
        let report = validate_instance(&inst).unwrap_err();
        assert_eq!(
            report.violations,
            alloc::vec![InstanceViolation::ColumnExceedsLimit { tx: 0, resource: 0 }]
        );
    }

    #[test]
    fn reflexive_exclusion_is_reported() {
        let mut inst = single_tx_instance(alloc::vec![1.0], alloc::vec![2.0]);
        inst.exclusions = alloc::vec![(1, 1)];
        let report = validate_instance(&inst).unwrap_err();
        assert!(report
            .violations
            .contains(&InstanceViolation::ReflexiveExclusion { tx: 1 }));
        // index 1 also does not exist in a one-transaction mempool
        assert!(report
            .violations
            .contains(&InstanceViolation::ExclusionOutOfRange { pair: (1, 1) }));
    }

    #[test]
    fn resource_vector_rejects_negative_and_nan() {
        assert!(ResourceVector::new(alloc::vec![1.0, -0.5]).is_err());
        assert!(ResourceVector::new(alloc::vec![f64::NAN]).is_err());
        assert!(PriceVector::new(alloc::vec![-1.0]).is_ok());
        assert!(PriceVector::new(alloc::vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn block_instance_json_round_trip() {
        let inst = BlockInstance::new(
            alloc::vec![3.0, 2.0],
            alloc::vec![alloc::vec![2.0, 1.0], alloc::vec![0.5, 0.25]],
            ResourceVector::new(alloc::vec![2.0, 1.0]).unwrap(),
            alloc::vec![(0, 1)],
        )
        .unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        assert!(text.contains("\"welfare\""));
        assert!(text.contains("\"consumption\""));
        assert!(text.contains("\"limit\""));
        assert!(text.contains("\"exclusions\""));
        let back: BlockInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn mismatched_rows_rejected() {
        let res = BlockInstance::new(
            alloc::vec![1.0],
            alloc::vec![alloc::vec![1.0], alloc::vec![1.0, 2.0]],
            ResourceVector::new(alloc::vec![2.0, 2.0]).unwrap(),
            alloc::vec![],
        );
        assert!(res.is_err());
    }
}

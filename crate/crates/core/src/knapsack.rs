//! 0/1 knapsack instances, exact solvers and repaired fitness evaluation.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::BitString;
use crate::engine::{Evaluation, Objective, ObjectiveError};

/// Largest item count [`brute_force_optimal`] accepts.
pub const BRUTE_FORCE_MAX_ITEMS: usize = 24;

#[derive(Debug, Error)]
pub enum KnapsackError {
    #[error("invalid generation parameters: {0}")]
    Config(String),
    #[error("selection has {got} bits for {expected} items")]
    LengthMismatch { expected: usize, got: usize },
    #[error("brute force refused for {0} items (limit {BRUTE_FORCE_MAX_ITEMS})")]
    TooManyItems(usize),
    #[error("instance file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstanceType {
    /// Uncorrelated weights and profits.
    Uci,
    /// Weakly correlated: profit within `R/10` of the weight.
    Wci,
    /// Strongly correlated: profit is weight plus `R/10`.
    Sci,
    /// Loaded from a file with no known generator.
    External,
}

impl fmt::Display for InstanceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uci => "UCI",
            Self::Wci => "WCI",
            Self::Sci => "SCI",
            Self::External => "EXTERNAL",
        })
    }
}

impl FromStr for InstanceType {
    type Err = KnapsackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "UCI" => Ok(Self::Uci),
            "WCI" => Ok(Self::Wci),
            "SCI" => Ok(Self::Sci),
            "EXTERNAL" => Ok(Self::External),
            other => Err(KnapsackError::Config(format!("unknown instance type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnapsackInstance {
    pub weights: Vec<u64>,
    pub profits: Vec<u64>,
    pub capacity: u64,
    pub instance_type: InstanceType,
    pub generation_seed: Option<u64>,
}

impl KnapsackInstance {
    pub fn new(weights: Vec<u64>, profits: Vec<u64>, capacity: u64) -> Result<Self, KnapsackError> {
        let inst = Self {
            weights,
            profits,
            capacity,
            instance_type: InstanceType::External,
            generation_seed: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn validate(&self) -> Result<(), KnapsackError> {
        if self.weights.len() != self.profits.len() {
            return Err(KnapsackError::Config(format!(
                "{} weights but {} profits",
                self.weights.len(),
                self.profits.len()
            )));
        }
        if let Some(i) = self.weights.iter().position(|&w| w == 0) {
            return Err(KnapsackError::Config(format!("item {i} has zero weight")));
        }
        if let Some(i) = self.profits.iter().position(|&p| p == 0) {
            return Err(KnapsackError::Config(format!("item {i} has zero profit")));
        }
        Ok(())
    }

    /// Weight and profit of a selection, without repair.
    pub fn totals(&self, selection: &BitString) -> Result<(u64, u64), KnapsackError> {
        self.check_len(selection)?;
        Ok(selection
            .ones()
            .fold((0, 0), |(w, p), i| (w + self.weights[i], p + self.profits[i])))
    }

    fn check_len(&self, selection: &BitString) -> Result<(), KnapsackError> {
        if selection.len() != self.len() {
            return Err(KnapsackError::LengthMismatch {
                expected: self.len(),
                got: selection.len(),
            });
        }
        Ok(())
    }

    /// Writes the line-oriented instance format.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {} {}", self.len(), self.capacity, self.instance_type)?;
        for (w, p) in self.weights.iter().zip(&self.profits) {
            writeln!(out, "{w} {p}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, KnapsackError> {
        let mut lines = input.lines().enumerate();
        let err = |line: usize, message: String| KnapsackError::Parse { line, message };
        let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
        let header = header?;
        let fields: Vec<&str> = header.split(' ').collect();
        let [n, capacity, kind] = fields[..] else {
            return Err(err(1, format!("expected `n capacity type`, got {header:?}")));
        };
        let n: usize = n.parse().map_err(|e| err(1, format!("bad item count {n:?}: {e}")))?;
        let capacity: u64 = capacity
            .parse()
            .map_err(|e| err(1, format!("bad capacity {capacity:?}: {e}")))?;
        let instance_type: InstanceType = kind.parse().map_err(|e| err(1, format!("{e}")))?;

        let mut weights = Vec::with_capacity(n);
        let mut profits = Vec::with_capacity(n);
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.is_empty() && weights.len() == n {
                continue;
            }
            if weights.len() == n {
                return Err(err(lineno, "more item lines than the header declares".into()));
            }
            let parts: Vec<&str> = line.split(' ').collect();
            let [w, p] = parts[..] else {
                return Err(err(lineno, format!("expected `weight profit`, got {line:?}")));
            };
            let w: u64 = w.parse().map_err(|e| err(lineno, format!("bad weight {w:?}: {e}")))?;
            let p: u64 = p.parse().map_err(|e| err(lineno, format!("bad profit {p:?}: {e}")))?;
            weights.push(w);
            profits.push(p);
        }
        if weights.len() != n {
            return Err(err(
                n + 1,
                format!("header declares {n} items, found {}", weights.len()),
            ));
        }
        let inst = Self {
            weights,
            profits,
            capacity,
            instance_type,
            generation_seed: None,
        };
        inst.validate().map_err(|e| err(1, e.to_string()))?;
        Ok(inst)
    }
}

/// Random instance of the given family.
///
/// Weights are uniform integers on `[1, r]`; capacity is
/// `floor(s · Σ weights)`.
pub fn generate(
    instance_type: InstanceType,
    n: usize,
    r: u64,
    s: f64,
    seed: u64,
) -> Result<KnapsackInstance, KnapsackError> {
    if n == 0 {
        return Err(KnapsackError::Config("n must be at least 1".into()));
    }
    if r < 10 {
        return Err(KnapsackError::Config(format!("R must be at least 10, got {r}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(KnapsackError::Config(format!("S must lie in (0, 1), got {s}")));
    }
    if instance_type == InstanceType::Sci && !r.is_multiple_of(10) {
        return Err(KnapsackError::Config(format!("SCI needs R divisible by 10, got {r}")));
    }
    if instance_type == InstanceType::External {
        return Err(KnapsackError::Config("EXTERNAL instances cannot be generated".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = (r / 10) as i64;
    let mut weights = Vec::with_capacity(n);
    let mut profits = Vec::with_capacity(n);
    for _ in 0..n {
        let w = rng.gen_range(1..=r);
        let p = match instance_type {
            InstanceType::Uci => rng.gen_range(1..=r),
            InstanceType::Wci => (w as i64 + rng.gen_range(-spread..=spread)).max(1) as u64,
            InstanceType::Sci => w + r / 10,
            InstanceType::External => unreachable!(),
        };
        weights.push(w);
        profits.push(p);
    }
    let capacity = capacity_for(&weights, s);
    Ok(KnapsackInstance {
        weights,
        profits,
        capacity,
        instance_type,
        generation_seed: Some(seed),
    })
}

/// `floor(s · Σ weights)`.
pub fn capacity_for(weights: &[u64], s: f64) -> u64 {
    (s * weights.iter().sum::<u64>() as f64).floor() as u64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpSolution {
    pub profit: u64,
    pub selection: BitString,
}

/// Capacity the DP table actually needs: no more than the total weight.
fn effective_capacity(instance: &KnapsackInstance) -> u64 {
    instance.capacity.min(instance.total_weight())
}

/// Bytes [`dp_optimal`] allocates for this instance.
pub fn dp_memory_bytes(instance: &KnapsackInstance) -> u128 {
    let cols = effective_capacity(instance) as u128 + 1;
    cols * 8 + (instance.len() as u128 * cols).div_ceil(8)
}

/// Exact optimum by dynamic programming over capacity.
///
/// One profit row plus an `n × (C+1)` bit table of take decisions, which is
/// walked backwards to recover an optimal selection.
pub fn dp_optimal(instance: &KnapsackInstance) -> DpSolution {
    let n = instance.len();
    let cap = effective_capacity(instance) as usize;
    if n == 0 || cap == 0 {
        return DpSolution {
            profit: 0,
            selection: BitString::zeros(n),
        };
    }
    let cols = cap + 1;
    let mut best = vec![0u64; cols];
    let mut take = vec![0u64; (n * cols).div_ceil(64)];
    for (i, (&w, &p)) in instance.weights.iter().zip(&instance.profits).enumerate() {
        let w = w as usize;
        if w > cap {
            continue;
        }
        for c in (w..cols).rev() {
            let with = best[c - w] + p;
            if with > best[c] {
                best[c] = with;
                let bit = i * cols + c;
                take[bit / 64] |= 1 << (bit % 64);
            }
        }
    }
    let mut selection = BitString::zeros(n);
    let mut c = cap;
    for i in (0..n).rev() {
        let bit = i * cols + c;
        if take[bit / 64] >> (bit % 64) & 1 == 1 {
            selection.set(i, true);
            c -= instance.weights[i] as usize;
        }
    }
    DpSolution {
        profit: best[cap],
        selection,
    }
}

/// Exhaustive optimum over all `2^n` subsets, visited in Gray-code order.
pub fn brute_force_optimal(instance: &KnapsackInstance) -> Result<u64, KnapsackError> {
    let n = instance.len();
    if n > BRUTE_FORCE_MAX_ITEMS {
        return Err(KnapsackError::TooManyItems(n));
    }
    let (mut weight, mut profit, mut best) = (0u64, 0u64, 0u64);
    let mut prev_gray = 0u32;
    for step in 1u32..(1 << n) {
        let gray = step ^ (step >> 1);
        let item = (gray ^ prev_gray).trailing_zeros() as usize;
        if gray & (1 << item) != 0 {
            weight += instance.weights[item];
            profit += instance.profits[item];
        } else {
            weight -= instance.weights[item];
            profit -= instance.profits[item];
        }
        if weight <= instance.capacity && profit > best {
            best = profit;
        }
        prev_gray = gray;
    }
    Ok(best)
}

/// Items ordered by ascending profit density `p/w`, ties by lower index.
fn drop_order(instance: &KnapsackInstance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.len()).collect();
    order.sort_by(|&a, &b| {
        let lhs = instance.profits[a] as u128 * instance.weights[b] as u128;
        let rhs = instance.profits[b] as u128 * instance.weights[a] as u128;
        lhs.cmp(&rhs).then(a.cmp(&b))
    });
    order
}

/// Knapsack fitness with greedy repair of overweight selections.
///
/// An overweight selection is repaired on a copy by dropping selected items
/// in ascending profit density until it fits; the fitness is the profit of
/// what remains.
#[derive(Debug, Clone)]
pub struct KnapsackObjective {
    instance: KnapsackInstance,
    drop_order: Vec<usize>,
}

impl KnapsackObjective {
    pub fn new(instance: KnapsackInstance) -> Self {
        let drop_order = drop_order(&instance);
        Self { instance, drop_order }
    }

    pub fn instance(&self) -> &KnapsackInstance {
        &self.instance
    }

    /// Profit after repair, and the repaired selection when it differs.
    pub fn repaired(&self, selection: &BitString) -> Result<(u64, Option<BitString>), KnapsackError> {
        let (mut weight, mut profit) = self.instance.totals(selection)?;
        if weight <= self.instance.capacity {
            return Ok((profit, None));
        }
        let mut fixed = selection.clone();
        for &i in &self.drop_order {
            if !fixed.get(i) {
                continue;
            }
            fixed.set(i, false);
            weight -= self.instance.weights[i];
            profit -= self.instance.profits[i];
            if weight <= self.instance.capacity {
                break;
            }
        }
        Ok((profit, Some(fixed)))
    }
}

impl Objective for KnapsackObjective {
    fn dimensions(&self) -> usize {
        self.instance.len()
    }

    fn evaluate(&self, position: &BitString) -> Result<Evaluation, ObjectiveError> {
        let (profit, repaired) = self.repaired(position).map_err(|e| match e {
            KnapsackError::LengthMismatch { expected, got } => ObjectiveError::DimensionMismatch { expected, got },
            other => ObjectiveError::Other(other.to_string()),
        })?;
        Ok(Evaluation {
            fitness: profit as f64,
            repaired,
        })
    }
}

/// Repaired profit of `selection`.
pub fn evaluate(instance: &KnapsackInstance, selection: &BitString) -> Result<u64, KnapsackError> {
    let (weight, profit) = instance.totals(selection)?;
    if weight <= instance.capacity {
        return Ok(profit);
    }
    KnapsackObjective::new(instance.clone())
        .repaired(selection)
        .map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_items(capacity: u64) -> KnapsackInstance {
        KnapsackInstance::new(vec![2, 3, 4], vec![3, 4, 5], capacity).unwrap()
    }

    /// Plain enumeration with per-subset sums, independent of the Gray walk.
    fn enumerate_optimum(inst: &KnapsackInstance) -> u64 {
        let n = inst.len();
        (0u32..1 << n)
            .filter_map(|mask| {
                let items = (0..n).filter(|i| mask >> i & 1 == 1);
                let w: u64 = items.clone().map(|i| inst.weights[i]).sum();
                let p: u64 = items.map(|i| inst.profits[i]).sum();
                (w <= inst.capacity).then_some(p)
            })
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn three_item_optimum() {
        let inst = three_items(5);
        assert_eq!(enumerate_optimum(&inst), 7);
        let dp = dp_optimal(&inst);
        assert_eq!(dp.profit, 7);
        assert_eq!(dp.selection, "110".parse().unwrap());
        assert_eq!(brute_force_optimal(&inst).unwrap(), 7);
    }

    #[test]
    fn dp_degenerate_cases() {
        assert_eq!(dp_optimal(&three_items(0)).profit, 0);
        let single = KnapsackInstance::new(vec![5], vec![9], 5).unwrap();
        assert_eq!(dp_optimal(&single).profit, 9);
        let empty = KnapsackInstance::new(vec![], vec![], 10).unwrap();
        assert_eq!(dp_optimal(&empty).profit, 0);
    }

    #[test]
    fn brute_force_degenerate_cases() {
        let empty = KnapsackInstance::new(vec![], vec![], 10).unwrap();
        assert_eq!(brute_force_optimal(&empty).unwrap(), 0);
        let heavy = KnapsackInstance::new(vec![10, 20], vec![5, 5], 9).unwrap();
        assert_eq!(brute_force_optimal(&heavy).unwrap(), 0);
        let big = KnapsackInstance::new(vec![1; 25], vec![1; 25], 9).unwrap();
        assert!(matches!(
            brute_force_optimal(&big),
            Err(KnapsackError::TooManyItems(25))
        ));
    }

    #[test]
    fn evaluate_examples() {
        let inst = three_items(5);
        assert_eq!(evaluate(&inst, &"000".parse().unwrap()).unwrap(), 0);
        assert_eq!(evaluate(&inst, &"110".parse().unwrap()).unwrap(), 7);
        // ratios 1.5, 1.33, 1.25: dropping item 3 leaves weight 5, which fits
        assert_eq!(evaluate(&inst, &"111".parse().unwrap()).unwrap(), 7);
        let obj = KnapsackObjective::new(inst);
        let (_, fixed) = obj.repaired(&"111".parse().unwrap()).unwrap();
        assert_eq!(fixed, Some("110".parse().unwrap()));
        // with C = 4 the drop continues past item 3 to item 2
        let (p, fixed) = KnapsackObjective::new(three_items(4))
            .repaired(&"111".parse().unwrap())
            .unwrap();
        assert_eq!((p, fixed), (3, Some("100".parse().unwrap())));
    }

    #[test]
    fn evaluate_length_mismatch() {
        let inst = three_items(5);
        assert!(matches!(
            evaluate(&inst, &"11".parse().unwrap()),
            Err(KnapsackError::LengthMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn repair_ties_drop_lower_index_first() {
        let inst = KnapsackInstance::new(vec![2, 2, 2], vec![2, 2, 2], 4).unwrap();
        let obj = KnapsackObjective::new(inst);
        let (p, fixed) = obj.repaired(&"111".parse().unwrap()).unwrap();
        assert_eq!(p, 4);
        assert_eq!(fixed, Some("011".parse().unwrap()));
    }

    #[test]
    fn sci_profit_offset() {
        let inst = generate(InstanceType::Sci, 100, 1000, 0.5, 7).unwrap();
        for (w, p) in inst.weights.iter().zip(&inst.profits) {
            assert_eq!(*p, w + 100);
        }
    }

    #[test]
    fn capacity_is_floored() {
        assert_eq!(capacity_for(&[10], 0.5), 5);
        assert_eq!(capacity_for(&[3, 4], 0.5), 3);
    }

    #[test]
    fn generation_rejects_bad_parameters() {
        assert!(generate(InstanceType::Sci, 10, 1005, 0.5, 1).is_err());
        assert!(generate(InstanceType::Uci, 0, 1000, 0.5, 1).is_err());
        assert!(generate(InstanceType::Uci, 10, 9, 0.5, 1).is_err());
        assert!(generate(InstanceType::Uci, 10, 1000, 1.0, 1).is_err());
    }

    #[test]
    fn wci_profits_respect_bounds() {
        // 2000 items x 50 seeds = 10^5 draws
        let mut clamped = 0;
        for seed in 0..50 {
            let inst = generate(InstanceType::Wci, 2000, 1000, 0.5, seed).unwrap();
            for (&w, &p) in inst.weights.iter().zip(&inst.profits) {
                assert!(p >= 1);
                assert!(p <= w + 100);
                assert!(p as i64 >= w as i64 - 100);
                if w < 100 && p == 1 {
                    clamped += 1;
                }
            }
        }
        assert!(clamped > 0, "the clamp-to-1 branch was never exercised");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(InstanceType::Uci, 50, 1000, 0.5, 11).unwrap();
        let b = generate(InstanceType::Uci, 50, 1000, 0.5, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.capacity, capacity_for(&a.weights, 0.5));
        assert!(a.weights.iter().chain(&a.profits).all(|&x| (1..=1000).contains(&x)));
    }

    #[test]
    fn instance_file_roundtrip() {
        let inst = generate(InstanceType::Wci, 20, 100, 0.5, 3).unwrap();
        let mut buf = Vec::new();
        inst.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("20 {} WCI\n", inst.capacity)));
        let back = KnapsackInstance::read_from(&buf[..]).unwrap();
        assert_eq!(back.weights, inst.weights);
        assert_eq!(back.profits, inst.profits);
        assert_eq!(back.capacity, inst.capacity);
    }

    #[test]
    fn instance_file_rejects_bad_input() {
        let cases = [
            "",
            "2 5\n1 1\n1 1\n",
            "2 5 UCI\n1 1\n",
            "1 5 UCI\n0 1\n",
            "1 5 UCI\n1  1\n",
            "1 5 UCI\n1 1\n2 2\n",
            "1 5 ISCI\n1 1\n",
        ];
        for text in cases {
            assert!(KnapsackInstance::read_from(text.as_bytes()).is_err(), "{text:?}");
        }
    }
}

//! Dimensional matrix, exact nullspace and Pi-set enumeration.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use itertools::Itertools;
use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dimensions::{QuantityRegistry, Rational};
use crate::error::{Error, Result};

/// Units × quantities exponent matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionalMatrix {
    units: Vec<String>,
    quantities: Vec<String>,
    rows: Vec<Vec<Rational>>,
}

impl DimensionalMatrix {
    pub fn from_rows(
        units: Vec<String>,
        quantities: Vec<String>,
        rows: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        if rows.len() != units.len() || rows.iter().any(|r| r.len() != quantities.len()) {
            return Err(Error::InvalidInput("dimensional matrix shape mismatch".into()));
        }
        Ok(Self {
            units,
            quantities,
            rows,
        })
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn quantities(&self) -> &[String] {
        &self.quantities
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn entry(&self, unit: usize, quantity: usize) -> Rational {
        self.rows[unit][quantity]
    }

    pub fn column(&self, quantity: usize) -> Vec<Rational> {
        self.rows.iter().map(|r| r[quantity]).collect()
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn n_quantities(&self) -> usize {
        self.quantities.len()
    }

    pub fn rank(&self) -> usize {
        rref(&self.rows, self.n_quantities()).1.len()
    }

    /// `M · v` for a rational exponent vector over the quantities.
    pub fn apply(&self, v: &[Rational]) -> Vec<Rational> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn apply_int(&self, v: &[i64]) -> Vec<Rational> {
        let v: Vec<Rational> = v.iter().map(|&e| Rational::from_integer(e)).collect();
        self.apply(&v)
    }

    fn permuted(&self, order: &[usize]) -> Vec<Vec<Rational>> {
        self.rows
            .iter()
            .map(|row| order.iter().map(|&j| row[j]).collect())
            .collect()
    }
}

pub fn build_dimensional_matrix(registry: &QuantityRegistry) -> DimensionalMatrix {
    let units: Vec<String> = registry.units().iter().map(|u| u.symbol.clone()).collect();
    let quantities = registry.names();
    let rows = (0..units.len())
        .map(|u| {
            registry
                .quantities()
                .iter()
                .map(|q| q.dim.exponents()[u])
                .collect()
        })
        .collect();
    DimensionalMatrix {
        units,
        quantities,
        rows,
    }
}

/// Reduced row echelon form by exact Gauss–Jordan elimination.
///
/// Returns the reduced rows and the pivot column of each nonzero row. Pivots
/// are chosen left to right.
fn rref(rows: &[Vec<Rational>], ncols: usize) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut a: Vec<Vec<Rational>> = rows.to_vec();
    let nrows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        if r >= nrows {
            break;
        }
        let Some(found) = (r..nrows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(r, found);
        let p = a[r][col];
        for v in a[r].iter_mut() {
            *v /= p;
        }
        for i in 0..nrows {
            if i == r || a[i][col].is_zero() {
                continue;
            }
            let factor = a[i][col];
            for j in 0..ncols {
                let delta = factor * a[r][j];
                a[i][j] -= delta;
            }
        }
        pivots.push(col);
        r += 1;
    }
    (a, pivots)
}

fn nullspace_of(rows: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let (reduced, pivots) = rref(rows, ncols);
    (0..ncols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Rational::zero(); ncols];
            v[free] = Rational::from_integer(1);
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -reduced[row][free];
            }
            v
        })
        .collect()
}

/// Basis of the nullspace of `m`, one vector per free column (left to right).
pub fn nullspace_basis(m: &DimensionalMatrix) -> Vec<Vec<Rational>> {
    nullspace_of(&m.rows, m.n_quantities())
}

/// Rank of a set of integer vectors over the rationals.
pub fn integer_rank(vectors: &[Vec<i64>]) -> usize {
    let Some(first) = vectors.first() else {
        return 0;
    };
    let rows: Vec<Vec<Rational>> = vectors
        .iter()
        .map(|v| v.iter().map(|&e| Rational::from_integer(e)).collect())
        .collect();
    rref(&rows, first.len()).1.len()
}

/// Scales a rational vector to coprime integers with the first nonzero entry positive.
pub fn canonical_integer(v: &[Rational]) -> Vec<i64> {
    let lcm = v.iter().fold(1i64, |acc, r| acc.lcm(r.denom()));
    let ints: Vec<i64> = v.iter().map(|r| (r * lcm).to_integer()).collect();
    let gcd = ints.iter().fold(0i64, |acc, &x| acc.gcd(&x));
    if gcd == 0 {
        return ints;
    }
    let sign = match ints.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => -1,
        _ => 1,
    };
    ints.iter().map(|&x| sign * x / gcd).collect()
}

fn canonical_ints(v: &[i64]) -> Vec<i64> {
    let r: Vec<Rational> = v.iter().map(|&e| Rational::from_integer(e)).collect();
    canonical_integer(&r)
}

/// A power-law product of quantities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PiGroup {
    pub exponents: Vec<i64>,
    pub display: String,
}

impl PiGroup {
    pub fn new(exponents: Vec<i64>, names: &[String]) -> Self {
        let display = render_group(&exponents, names);
        Self { exponents, display }
    }
}

impl fmt::Display for PiGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display)
    }
}

fn render_group(exponents: &[i64], names: &[String]) -> String {
    let parts: Vec<String> = exponents
        .iter()
        .zip(names)
        .filter(|(e, _)| **e != 0)
        .map(|(&e, n)| if e == 1 { n.clone() } else { format!("{n}^{e}") })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("·")
    }
}

/// Evaluates `∏ valueᵢ^exponentᵢ`, with positive and negative powers
/// accumulated separately and divided once.
pub fn evaluate_pi(group: &PiGroup, names: &[String], values: &[f64]) -> Result<f64> {
    let mut num = 1.0f64;
    let mut den = 1.0f64;
    for ((&e, &v), name) in group.exponents.iter().zip(values).zip(names) {
        if e == 0 {
            continue;
        }
        let fail = |reason: String| Error::PiEvaluation {
            quantity: name.clone(),
            reason,
        };
        if !v.is_finite() {
            return Err(fail(format!("non-finite value {v}")));
        }
        if e > 0 {
            num *= v.powi(e as i32);
        } else {
            if v == 0.0 {
                return Err(fail(format!("zero base with exponent {e}")));
            }
            den *= v.powi((-e) as i32);
        }
        if !num.is_finite() || !den.is_finite() || den == 0.0 {
            return Err(fail("intermediate product over/underflowed".into()));
        }
    }
    let out = num / den;
    if !out.is_finite() {
        let name = group
            .exponents
            .iter()
            .zip(names)
            .find(|(e, _)| **e != 0)
            .map(|(_, n)| n.clone())
            .unwrap_or_default();
        return Err(Error::PiEvaluation {
            quantity: name,
            reason: format!("non-finite result {out}"),
        });
    }
    Ok(out)
}

/// An ordered set of independent Pi groups with the target isolated in one of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiSet {
    pub quantities: Vec<String>,
    /// Quantity index of the target.
    pub target: usize,
    /// Position of π₁ (the group containing the target) in `groups`.
    pub target_index: usize,
    pub groups: Vec<PiGroup>,
}

impl PiSet {
    pub fn from_exponents(
        quantities: Vec<String>,
        target: usize,
        target_index: usize,
        exponents: Vec<Vec<i64>>,
    ) -> Self {
        let groups = exponents
            .into_iter()
            .map(|e| PiGroup::new(e, &quantities))
            .collect();
        Self {
            quantities,
            target,
            target_index,
            groups,
        }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn target_name(&self) -> &str {
        &self.quantities[self.target]
    }

    pub fn target_group(&self) -> &PiGroup {
        &self.groups[self.target_index]
    }

    /// Indices of the non-target groups, in set order.
    pub fn input_indices(&self) -> Vec<usize> {
        (0..self.groups.len())
            .filter(|&k| k != self.target_index)
            .collect()
    }

    pub fn exponent_matrix(&self) -> Vec<Vec<i64>> {
        self.groups.iter().map(|g| g.exponents.clone()).collect()
    }

    pub fn evaluate(&self, k: usize, values: &[f64]) -> Result<f64> {
        evaluate_pi(&self.groups[k], &self.quantities, values)
    }

    pub fn evaluate_all(&self, values: &[f64]) -> Result<Vec<f64>> {
        (0..self.groups.len())
            .map(|k| self.evaluate(k, values))
            .collect()
    }

    /// Checks the set against `m`: every group dimensionless, `p − rank` groups,
    /// linear independence, target only in π₁ with exponent +1, and canonical
    /// form for the remaining groups.
    pub fn validate(&self, m: &DimensionalMatrix) -> Result<()> {
        let bad = |msg: String| Err(Error::Invariant(msg));
        if m.quantities() != self.quantities.as_slice() {
            return bad("pi set quantities do not match the registry".into());
        }
        let n = m.n_quantities() - m.rank();
        if self.groups.len() != n {
            return bad(format!("set has {} groups, expected {n}", self.groups.len()));
        }
        for g in &self.groups {
            if g.exponents.len() != m.n_quantities() {
                return bad(format!("group {g} has the wrong length"));
            }
            if m.apply_int(&g.exponents).iter().any(|e| !e.is_zero()) {
                return bad(format!("group {g} is not dimensionless"));
            }
        }
        if integer_rank(&self.exponent_matrix()) != n {
            return bad("groups are linearly dependent".into());
        }
        for (k, g) in self.groups.iter().enumerate() {
            let e = g.exponents[self.target];
            if k == self.target_index && e != 1 {
                return bad(format!("target exponent in π₁ is {e}, expected 1"));
            }
            if k != self.target_index {
                if e != 0 {
                    return bad(format!("target appears in non-target group {g}"));
                }
                if canonical_ints(&g.exponents) != g.exponents {
                    return bad(format!("group {g} is not in canonical form"));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for PiSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.groups.iter().map(|g| g.display.as_str()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumerationLimits {
    pub max_sets: usize,
    pub max_abs_exponent: i64,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self {
            max_sets: 512,
            max_abs_exponent: 3,
        }
    }
}

fn within(v: &[i64], bound: i64) -> bool {
    v.iter().all(|e| e.abs() <= bound)
}

/// Canonical set key: π₁ first, remaining groups sorted.
fn set_key(target_group: Vec<i64>, mut others: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    others.sort();
    let mut out = Vec::with_capacity(others.len() + 1);
    out.push(target_group);
    out.extend(others);
    out
}

/// Enumerates candidate Pi sets with `target` isolated in π₁.
///
/// Seeds are the reduced-echelon nullspace bases obtained for every admissible
/// choice of pivot (repeating) quantities; each seed is then diversified by
/// single elementary integer operations `gⱼ ← gⱼ ± gᵢ` that keep the target
/// isolated. Groups whose exponents exceed `max_abs_exponent` are discarded.
/// Output is sorted lexicographically by exponent matrix and truncated to
/// `max_sets`.
pub fn enumerate_pi_sets(
    registry: &QuantityRegistry,
    target: &str,
    limits: EnumerationLimits,
) -> Result<Vec<PiSet>> {
    let t = registry
        .index_of(target)
        .ok_or_else(|| Error::InvalidInput(format!("unknown target quantity `{target}`")))?;
    let m = build_dimensional_matrix(registry);
    let p = m.n_quantities();
    let rank = m.rank();
    if p <= rank {
        return Err(Error::DegenerateSystem { p, f: rank });
    }
    let bound = limits.max_abs_exponent.max(1);
    let others: Vec<usize> = (0..p).filter(|&j| j != t).collect();
    let mut found: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();

    for repeating in others.iter().copied().combinations(rank) {
        let order: Vec<usize> = repeating
            .iter()
            .copied()
            .chain((0..p).filter(|j| !repeating.contains(j)))
            .collect();
        let permuted = m.permuted(&order);
        let (_, pivots) = rref(&permuted, p);
        if pivots != (0..rank).collect::<Vec<_>>() {
            continue;
        }
        let basis = nullspace_of(&permuted, p);
        let mut target_group: Option<Vec<i64>> = None;
        let mut groups: Vec<Vec<i64>> = Vec::new();
        for v in basis {
            let mut unpermuted = vec![Rational::zero(); p];
            for (pos, &orig) in order.iter().enumerate() {
                unpermuted[orig] = v[pos];
            }
            if !unpermuted[t].is_zero() {
                if unpermuted.iter().any(|r| !r.is_integer()) {
                    target_group = None;
                    groups.clear();
                    break;
                }
                target_group = Some(unpermuted.iter().map(|r| r.to_integer()).collect());
            } else {
                groups.push(canonical_integer(&unpermuted));
            }
        }
        let Some(target_group) = target_group else {
            continue;
        };
        if !within(&target_group, bound) || groups.iter().any(|g| !within(g, bound)) {
            continue;
        }
        found.insert(set_key(target_group.clone(), groups.clone()));

        let all: Vec<Vec<i64>> = std::iter::once(target_group.clone())
            .chain(groups.iter().cloned())
            .collect();
        for j in 0..all.len() {
            for i in 1..all.len() {
                if i == j {
                    continue;
                }
                for c in [-1i64, 1] {
                    let combined: Vec<i64> = all[j]
                        .iter()
                        .zip(&all[i])
                        .map(|(a, b)| a + c * b)
                        .collect();
                    let combined = if j == 0 {
                        combined
                    } else {
                        canonical_ints(&combined)
                    };
                    if combined.iter().all(|&e| e == 0) || !within(&combined, bound) {
                        continue;
                    }
                    let mut next = all.clone();
                    next[j] = combined;
                    let tg = next.remove(0);
                    found.insert(set_key(tg, next));
                }
            }
        }
    }

    if found.is_empty() {
        return Err(Error::InfeasibleTarget(target.to_string()));
    }
    let names = registry.names();
    Ok(found
        .into_iter()
        .take(limits.max_sets)
        .map(|mat| PiSet::from_exponents(names.clone(), t, 0, mat))
        .collect())
}

/// On-disk Pi-set collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiSetFile {
    pub quantities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub sets: Vec<PiSetEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiSetEntry {
    pub target_index: usize,
    pub exponents: Vec<Vec<i64>>,
}

impl PiSetFile {
    pub fn from_sets(sets: &[PiSet]) -> Result<Self> {
        let first = sets
            .first()
            .ok_or_else(|| Error::InvalidInput("no pi sets to write".into()))?;
        Ok(Self {
            quantities: first.quantities.clone(),
            target: Some(first.target_name().to_string()),
            sets: sets
                .iter()
                .map(|s| PiSetEntry {
                    target_index: s.target_index,
                    exponents: s.exponent_matrix(),
                })
                .collect(),
        })
    }

    pub fn into_sets(self) -> Result<Vec<PiSet>> {
        let p = self.quantities.len();
        let explicit = match &self.target {
            Some(name) => Some(self.quantities.iter().position(|q| q == name).ok_or_else(
                || Error::Format(format!("pi-set target `{name}` is not among the quantities")),
            )?),
            None => None,
        };
        self.sets
            .into_iter()
            .map(|entry| {
                if entry.target_index >= entry.exponents.len()
                    || entry.exponents.iter().any(|g| g.len() != p)
                {
                    return Err(Error::Format("malformed pi-set entry".into()));
                }
                let target = match explicit {
                    Some(t) => t,
                    None => infer_target(&entry)?,
                };
                Ok(PiSet::from_exponents(
                    self.quantities.clone(),
                    target,
                    entry.target_index,
                    entry.exponents,
                ))
            })
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vec<PiSet>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PiSetFile =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("pi-set file: {e}")))?;
        file.into_sets()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

fn infer_target(entry: &PiSetEntry) -> Result<usize> {
    let tg = &entry.exponents[entry.target_index];
    let candidates: Vec<usize> = (0..tg.len())
        .filter(|&q| {
            tg[q] == 1
                && entry
                    .exponents
                    .iter()
                    .enumerate()
                    .all(|(k, g)| k == entry.target_index || g[q] == 0)
        })
        .collect();
    match candidates.as_slice() {
        [q] => Ok(*q),
        _ => Err(Error::Format(
            "cannot infer the target quantity; add a `target` field to the pi-set file".into(),
        )),
    }
}

/// True when `a` and `b` span the same rational subspace.
pub fn same_span(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> bool {
    let Some(first) = a.first().or(b.first()) else {
        return true;
    };
    let ncols = first.len();
    let ra = rref(a, ncols).1.len();
    let rb = rref(b, ncols).1.len();
    let mut both = a.to_vec();
    both.extend(b.iter().cloned());
    ra == rb && rref(&both, ncols).1.len() == ra
}

/// Largest absolute exponent in a set.
pub fn max_abs_exponent(set: &PiSet) -> i64 {
    set.groups
        .iter()
        .flat_map(|g| g.exponents.iter())
        .map(|e| e.abs())
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimensions::{
        bucket_force_registry, default_units, DimVector, Quantity, QuantityRegistry, Role,
    };

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn small_registry(spec: &[(&str, [i64; 3])]) -> QuantityRegistry {
        let quantities = spec
            .iter()
            .enumerate()
            .map(|(i, (name, e))| Quantity {
                name: name.to_string(),
                dim: DimVector::from_ints(e),
                role: if i == 0 { Role::Target } else { Role::Input },
                unit_label: String::new(),
            })
            .collect();
        QuantityRegistry::new(default_units(), quantities).unwrap()
    }

    fn ex(names: &[String], pairs: &[(&str, i64)]) -> Vec<i64> {
        let mut v = vec![0; names.len()];
        for (n, e) in pairs {
            v[names.iter().position(|x| x == n).unwrap()] = *e;
        }
        v
    }

    #[test]
    fn matrix_for_bucket_registry() {
        let m = build_dimensional_matrix(&bucket_force_registry());
        assert_eq!((m.n_units(), m.n_quantities()), (3, 9));
        assert_eq!(m.column(0), vec![r(1), r(1), r(-2)]);
        assert_eq!(m.rank(), 3);
        assert_eq!(nullspace_basis(&m).len(), 6);
    }

    #[test]
    fn zero_column_for_dimensionless_quantity() {
        let reg = small_registry(&[("eta", [0, 0, 0]), ("x", [0, 1, 0])]);
        let m = build_dimensional_matrix(&reg);
        assert_eq!(m.column(0), vec![r(0); 3]);
    }

    #[test]
    fn identity_has_empty_nullspace() {
        let reg = small_registry(&[("a", [1, 0, 0]), ("b", [0, 1, 0]), ("c", [0, 0, 1])]);
        assert!(nullspace_basis(&build_dimensional_matrix(&reg)).is_empty());
    }

    #[test]
    fn four_quantity_nullspace_spans_expected_groups() {
        let reg = small_registry(&[
            ("F21", [1, 1, -2]),
            ("F31", [1, 1, -2]),
            ("m_b", [1, 0, 0]),
            ("a1", [0, 1, -2]),
        ]);
        let m = build_dimensional_matrix(&reg);
        assert_eq!(m.rank(), 2);
        let basis = nullspace_basis(&m);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!(m.apply(v).iter().all(Zero::is_zero));
        }
        // F21/F31 and F31/(m_b·a1)
        let expected = vec![
            vec![r(1), r(-1), r(0), r(0)],
            vec![r(0), r(1), r(-1), r(-1)],
        ];
        assert!(same_span(&basis, &expected));
    }

    #[test]
    fn bucket_registry_contains_force_ratio_and_reference_set() {
        let reg = bucket_force_registry();
        let names = reg.names();
        let sets = enumerate_pi_sets(
            &reg,
            "F21",
            EnumerationLimits {
                max_sets: usize::MAX,
                max_abs_exponent: 3,
            },
        )
        .unwrap();
        let m = build_dimensional_matrix(&reg);
        let ratio = ex(&names, &[("F21", 1), ("F31", -1)]);
        assert!(sets.iter().any(|s| s.target_group().exponents == ratio));
        let mut want = vec![
            ex(&names, &[("P_f_tilt", 1), ("F31", -1)]),
            ex(&names, &[("P_f_lift", 1), ("F31", -1)]),
            ex(&names, &[("y_b", 1), ("x_b", -1)]),
            ex(&names, &[("F31", 1), ("m_b", -1), ("x_b", -1), ("alpha1", -1)]),
            ex(&names, &[("a1", 1), ("x_b", -1), ("alpha1", -1)]),
        ];
        want = want.iter().map(|g| canonical_ints(g)).collect();
        want.sort();
        assert!(sets.iter().any(|s| {
            let mut rest: Vec<Vec<i64>> = s.groups[1..].iter().map(|g| g.exponents.clone()).collect();
            rest.sort();
            s.groups[0].exponents == ratio && rest == want
        }));
        for s in &sets {
            s.validate(&m).unwrap();
            assert_eq!(s.len(), 6);
        }
    }

    #[test]
    fn two_identical_quantities_give_single_set() {
        let reg = small_registry(&[("q1", [0, 1, 0]), ("q2", [0, 1, 0])]);
        let sets = enumerate_pi_sets(&reg, "q1", EnumerationLimits::default()).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].groups[0].exponents, vec![1, -1]);
        assert_eq!(sets[0].groups[0].display, "q1·q2^-1");
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        // Only the target carries mass: no group can contain it.
        let reg = small_registry(&[("m", [1, 0, 0]), ("x", [0, 1, 0]), ("y", [0, 1, 0])]);
        assert!(matches!(
            enumerate_pi_sets(&reg, "m", EnumerationLimits::default()),
            Err(Error::InfeasibleTarget(_))
        ));
        // Target needs exponent 2 relative to its partner.
        let quantities = vec![
            Quantity {
                name: "h".into(),
                dim: DimVector::new(vec![r(0), Rational::new(1, 2), r(0)]),
                role: Role::Target,
                unit_label: String::new(),
            },
            Quantity {
                name: "x".into(),
                dim: DimVector::from_ints(&[0, 1, 0]),
                role: Role::Input,
                unit_label: String::new(),
            },
        ];
        let reg = QuantityRegistry::new(default_units(), quantities).unwrap();
        assert!(matches!(
            enumerate_pi_sets(&reg, "h", EnumerationLimits::default()),
            Err(Error::InfeasibleTarget(_))
        ));
    }

    #[test]
    fn degenerate_system_rejected() {
        let reg = small_registry(&[("a", [1, 0, 0]), ("b", [0, 1, 0])]);
        assert!(matches!(
            enumerate_pi_sets(&reg, "a", EnumerationLimits::default()),
            Err(Error::DegenerateSystem { .. })
        ));
    }

    #[test]
    fn enumeration_is_sorted_and_repeatable() {
        let reg = bucket_force_registry();
        let a = enumerate_pi_sets(&reg, "F21", EnumerationLimits::default()).unwrap();
        let b = enumerate_pi_sets(&reg, "F21", EnumerationLimits::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].exponent_matrix() < w[1].exponent_matrix()));
        assert!(a.iter().all(|s| max_abs_exponent(s) <= 3));
    }

    #[test]
    fn canonical_form() {
        let v = vec![Rational::new(-1, 2), r(1), r(0)];
        assert_eq!(canonical_integer(&v), vec![1, -2, 0]);
        assert_eq!(canonical_integer(&[r(0), r(4), r(-6)]), vec![0, 2, -3]);
    }

    #[test]
    fn evaluate_examples() {
        let names: Vec<String> = ["F21", "F31", "a1", "x_b", "alpha1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let ratio = PiGroup::new(vec![1, -1, 0, 0, 0], &names);
        assert_eq!(evaluate_pi(&ratio, &names, &[800.0, 1000.0, 0.0, 0.0, 0.0]).unwrap(), 0.8);
        let acc = PiGroup::new(vec![0, 0, 1, -1, -1], &names);
        assert_eq!(evaluate_pi(&acc, &names, &[0.0, 0.0, 2.0, 0.5, 4.0]).unwrap(), 1.0);
        assert_eq!(evaluate_pi(&acc, &names, &[1.0; 5]).unwrap(), 1.0);
        match evaluate_pi(&acc, &names, &[0.0, 0.0, 2.0, 0.5, 0.0]) {
            Err(Error::PiEvaluation { quantity, .. }) => assert_eq!(quantity, "alpha1"),
            other => panic!("unexpected {other:?}"),
        }
        // Negative bases are fine with integer exponents.
        assert_eq!(evaluate_pi(&ratio, &names, &[-3.0, 2.0, 1.0, 1.0, 1.0]).unwrap(), -1.5);
    }

    #[test]
    fn pi_set_file_round_trip_and_target_inference() {
        let reg = bucket_force_registry();
        let sets = enumerate_pi_sets(&reg, "F21", EnumerationLimits { max_sets: 5, max_abs_exponent: 2 }).unwrap();
        let file = PiSetFile::from_sets(&sets).unwrap();
        let json = serde_json::to_string(&file).unwrap();
        let back: PiSetFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.clone().into_sets().unwrap(), sets);
        let mut anon = back;
        anon.target = None;
        let inferred = anon.into_sets().unwrap();
        assert!(inferred.iter().all(|s| s.target == 0));
    }
}

//! Fundamental units, energy domains and the quantity registry.
//!
//! Dimensions are exact: every exponent is a rational number and a quantity is
//! dimensionless only when all of its exponents are exactly zero.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = num_rational::Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundamentalUnit {
    pub symbol: String,
    #[serde(default)]
    pub description: String,
}

impl FundamentalUnit {
    pub fn new(symbol: &str, description: &str) -> Self {
        Self {
            symbol: symbol.to_string(),
            description: description.to_string(),
        }
    }
}

/// Mass, length and time in SI base units.
pub fn default_units() -> Vec<FundamentalUnit> {
    vec![
        FundamentalUnit::new("M", "mass (kg)"),
        FundamentalUnit::new("L", "length (m)"),
        FundamentalUnit::new("T", "time (s)"),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyDomain {
    pub name: String,
    pub units: BTreeSet<String>,
}

impl EnergyDomain {
    pub fn new(name: &str, units: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            units: units.iter().map(|u| u.to_string()).collect(),
        }
    }
}

/// Number of fundamental units spanned by a set of energy domains.
///
/// Computed as the size of the union of the domains' unit sets. For two domains
/// this equals `β₁ + β₂ − ξ₁₂`; for three or more it also accounts for units
/// shared only between non-first domains.
pub fn fundamental_unit_count(domains: &[EnergyDomain]) -> Result<usize> {
    if domains.is_empty() {
        return Err(Error::InvalidInput(
            "at least one energy domain is required".into(),
        ));
    }
    let union: BTreeSet<&str> = domains
        .iter()
        .flat_map(|d| d.units.iter().map(String::as_str))
        .collect();
    Ok(union.len())
}

/// Like [`fundamental_unit_count`], additionally checking every unit symbol
/// against a registry.
pub fn fundamental_unit_count_checked(
    domains: &[EnergyDomain],
    units: &[FundamentalUnit],
) -> Result<usize> {
    for domain in domains {
        for symbol in &domain.units {
            if !units.iter().any(|u| &u.symbol == symbol) {
                return Err(Error::InvalidInput(format!(
                    "energy domain `{}` references unregistered unit `{symbol}`",
                    domain.name
                )));
            }
        }
    }
    fundamental_unit_count(domains)
}

/// Number of dimensionless groups, `n = p − f`.
pub fn pi_count(p: usize, f: usize) -> Result<usize> {
    if f == 0 {
        return Err(Error::InvalidInput(
            "at least one fundamental unit is required".into(),
        ));
    }
    if p <= f {
        return Err(Error::DegenerateSystem { p, f });
    }
    Ok(p - f)
}

/// Exponents of a quantity over the registry's fundamental units.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DimVector {
    exponents: Vec<Rational>,
}

impl DimVector {
    pub fn new(exponents: Vec<Rational>) -> Self {
        Self { exponents }
    }

    pub fn from_ints(exponents: &[i64]) -> Self {
        Self::new(exponents.iter().map(|&e| Rational::from_integer(e)).collect())
    }

    pub fn zero(len: usize) -> Self {
        Self::new(vec![Rational::zero(); len])
    }

    pub fn exponents(&self) -> &[Rational] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn scale(&self, factor: Rational) -> Self {
        Self::new(self.exponents.iter().map(|e| e * factor).collect())
    }

    /// Renders the signature as e.g. `M·L·T^-2`, or `1` when dimensionless.
    pub fn render(&self, units: &[FundamentalUnit]) -> String {
        let parts: Vec<String> = self
            .exponents
            .iter()
            .zip(units)
            .filter(|(e, _)| !e.is_zero())
            .map(|(e, u)| {
                if e.is_one() {
                    u.symbol.clone()
                } else {
                    format!("{}^{}", u.symbol, e)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("·")
        }
    }
}

pub fn check_dimensionless(dim: &DimVector) -> bool {
    dim.exponents.iter().all(Zero::is_zero)
}

impl Add for &DimVector {
    type Output = DimVector;

    fn add(self, rhs: &DimVector) -> DimVector {
        assert_eq!(self.len(), rhs.len(), "dimension vectors of different length");
        DimVector::new(
            self.exponents
                .iter()
                .zip(&rhs.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl Sub for &DimVector {
    type Output = DimVector;

    fn sub(self, rhs: &DimVector) -> DimVector {
        self + &(-rhs)
    }
}

impl Neg for &DimVector {
    type Output = DimVector;

    fn neg(self) -> DimVector {
        DimVector::new(self.exponents.iter().map(|e| -e).collect())
    }
}

impl Mul<Rational> for &DimVector {
    type Output = DimVector;

    fn mul(self, rhs: Rational) -> DimVector {
        self.scale(rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Target,
    Input,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub name: String,
    pub dim: DimVector,
    pub role: Role,
    pub unit_label: String,
}

/// Fundamental units plus the physical quantities declared over them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityRegistry {
    units: Vec<FundamentalUnit>,
    quantities: Vec<Quantity>,
    domains: Vec<EnergyDomain>,
}

impl QuantityRegistry {
    pub fn new(units: Vec<FundamentalUnit>, quantities: Vec<Quantity>) -> Result<Self> {
        Self::with_domains(units, quantities, Vec::new())
    }

    pub fn with_domains(
        units: Vec<FundamentalUnit>,
        quantities: Vec<Quantity>,
        domains: Vec<EnergyDomain>,
    ) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::InvalidInput("registry has no fundamental units".into()));
        }
        let mut seen = BTreeSet::new();
        for u in &units {
            if !seen.insert(u.symbol.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate fundamental unit `{}`",
                    u.symbol
                )));
            }
        }
        if quantities.is_empty() {
            return Err(Error::InvalidInput("registry has no quantities".into()));
        }
        let mut names = BTreeSet::new();
        for q in &quantities {
            if !names.insert(q.name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate quantity `{}`", q.name)));
            }
            if q.dim.len() != units.len() {
                return Err(Error::InvalidInput(format!(
                    "quantity `{}` has {} exponents but the registry declares {} units",
                    q.name,
                    q.dim.len(),
                    units.len()
                )));
            }
        }
        let targets = quantities.iter().filter(|q| q.role == Role::Target).count();
        if targets != 1 {
            return Err(Error::InvalidInput(format!(
                "registry must declare exactly one target quantity, found {targets}"
            )));
        }
        if !domains.is_empty() {
            fundamental_unit_count_checked(&domains, &units)?;
        }
        Ok(Self {
            units,
            quantities,
            domains,
        })
    }

    pub fn units(&self) -> &[FundamentalUnit] {
        &self.units
    }

    pub fn quantities(&self) -> &[Quantity] {
        &self.quantities
    }

    pub fn domains(&self) -> &[EnergyDomain] {
        &self.domains
    }

    pub fn names(&self) -> Vec<String> {
        self.quantities.iter().map(|q| q.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.quantities.iter().position(|q| q.name == name)
    }

    pub fn target_index(&self) -> usize {
        self.quantities
            .iter()
            .position(|q| q.role == Role::Target)
            .expect("registry invariant: exactly one target")
    }

    pub fn target(&self) -> &Quantity {
        &self.quantities[self.target_index()]
    }

    /// Returns a copy with the target role moved to `name`.
    pub fn retarget(&self, name: &str) -> Result<Self> {
        if self.index_of(name).is_none() {
            return Err(Error::InvalidInput(format!("unknown target quantity `{name}`")));
        }
        let mut out = self.clone();
        for q in &mut out.quantities {
            q.role = if q.name == name { Role::Target } else { Role::Input };
        }
        Ok(out)
    }

    /// Fundamental-unit count `f`: from the declared energy domains when present,
    /// otherwise the registry size.
    pub fn fundamental_count(&self) -> usize {
        if self.domains.is_empty() {
            self.units.len()
        } else {
            fundamental_unit_count(&self.domains).unwrap_or(self.units.len())
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: RegistryFile =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("registry: {e}")))?;
        file.into_registry()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_file(&self) -> RegistryFile {
        RegistryFile {
            description: None,
            fundamental_units: self.units.iter().map(|u| u.symbol.clone()).collect(),
            energy_domains: self.domains.clone(),
            quantities: self
                .quantities
                .iter()
                .map(|q| QuantityEntry {
                    name: q.name.clone(),
                    exponents: q.dim.exponents().iter().map(Exponent::from_rational).collect(),
                    role: q.role,
                    unit_label: q.unit_label.clone(),
                })
                .collect(),
        }
    }
}

/// On-disk registry layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegistryFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub fundamental_units: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub energy_domains: Vec<EnergyDomain>,
    pub quantities: Vec<QuantityEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantityEntry {
    pub name: String,
    pub exponents: Vec<Exponent>,
    pub role: Role,
    #[serde(default)]
    pub unit_label: String,
}

/// An exponent written either as a JSON integer or as a `"num/den"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Int(i64),
    Ratio(String),
}

impl Exponent {
    pub fn from_rational(r: &Rational) -> Self {
        if r.is_integer() {
            Exponent::Int(*r.numer())
        } else {
            Exponent::Ratio(format!("{}/{}", r.numer(), r.denom()))
        }
    }

    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            Exponent::Int(i) => Ok(Rational::from_integer(*i)),
            Exponent::Ratio(s) => parse_rational(s),
        }
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Format(format!("invalid rational exponent `{s}`"));
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => s.parse::<i64>().map(Rational::from_integer).map_err(|_| bad()),
    }
}

impl RegistryFile {
    pub fn into_registry(self) -> Result<QuantityRegistry> {
        let units: Vec<FundamentalUnit> = self
            .fundamental_units
            .iter()
            .map(|s| FundamentalUnit::new(s, ""))
            .collect();
        let quantities = self
            .quantities
            .into_iter()
            .map(|entry| {
                let exps = entry
                    .exponents
                    .iter()
                    .map(Exponent::to_rational)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Quantity {
                    name: entry.name,
                    dim: DimVector::new(exps),
                    role: entry.role,
                    unit_label: entry.unit_label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        QuantityRegistry::with_domains(units, quantities, self.energy_domains)
    }
}

impl fmt::Display for QuantityRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in &self.quantities {
            writeln!(
                f,
                "{:<10} {:<16} {:?}",
                q.name,
                q.dim.render(&self.units),
                q.role
            )?;
        }
        Ok(())
    }
}

/// The bucket-force registry: target `F21` plus the eight quantities it depends on.
pub fn bucket_force_registry() -> QuantityRegistry {
    let q = |name: &str, e: [i64; 3], role: Role, label: &str| Quantity {
        name: name.to_string(),
        dim: DimVector::from_ints(&e),
        role,
        unit_label: label.to_string(),
    };
    QuantityRegistry::with_domains(
        default_units(),
        vec![
            q("F21", [1, 1, -2], Role::Target, "N"),
            q("F31", [1, 1, -2], Role::Input, "N"),
            q("P_f_tilt", [1, 1, -2], Role::Input, "N"),
            q("P_f_lift", [1, 1, -2], Role::Input, "N"),
            q("x_b", [0, 1, 0], Role::Input, "m"),
            q("y_b", [0, 1, 0], Role::Input, "m"),
            q("m_b", [1, 0, 0], Role::Input, "kg"),
            q("a1", [0, 1, -2], Role::Input, "m/s^2"),
            q("alpha1", [0, 0, -2], Role::Input, "rad/s^2"),
        ],
        vec![
            EnergyDomain::new("mechanical", &["M", "L", "T"]),
            EnergyDomain::new("hydraulic", &["M", "L", "T"]),
        ],
    )
    .expect("built-in registry is valid")
}

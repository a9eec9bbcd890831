//! The fixed unit table and unit-carrying decimal quantities.
//!
//! Every unit maps onto one of five independent base dimensions with an exact
//! decimal factor to that dimension's base unit (kg, mm, s, W, V).

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::HubError;

/// Exponents over (mass, length, time, power, voltage).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Dimension([i8; 5]);

impl Dimension {
    pub const NONE: Dimension = Dimension([0, 0, 0, 0, 0]);
    pub const MASS: Dimension = Dimension([1, 0, 0, 0, 0]);
    pub const LENGTH: Dimension = Dimension([0, 1, 0, 0, 0]);
    pub const TIME: Dimension = Dimension([0, 0, 1, 0, 0]);
    pub const POWER: Dimension = Dimension([0, 0, 0, 1, 0]);
    pub const VOLTAGE: Dimension = Dimension([0, 0, 0, 0, 1]);

    const BASE_SYMBOLS: [&'static str; 5] = ["kg", "mm", "s", "W", "V"];

    pub fn is_dimensionless(self) -> bool {
        self == Self::NONE
    }

    pub fn product(self, other: Dimension) -> Dimension {
        let mut out = [0i8; 5];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.0[i] + other.0[i];
        }
        Dimension(out)
    }

    pub fn quotient(self, other: Dimension) -> Dimension {
        let mut out = [0i8; 5];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.0[i] - other.0[i];
        }
        Dimension(out)
    }

    /// Symbol of the base unit in which values of this dimension are held,
    /// e.g. `kg`, `W*s`, `mm^2`. Empty for dimensionless values.
    pub fn base_symbol(self) -> String {
        let mut num = Vec::new();
        let mut den = Vec::new();
        for (i, &exp) in self.0.iter().enumerate() {
            let sym = Self::BASE_SYMBOLS[i];
            let part = |e: i8| {
                if e == 1 {
                    sym.to_string()
                } else {
                    format!("{sym}^{e}")
                }
            };
            match exp.cmp(&0) {
                std::cmp::Ordering::Greater => num.push(part(exp)),
                std::cmp::Ordering::Less => den.push(part(-exp)),
                std::cmp::Ordering::Equal => {}
            }
        }
        match (num.is_empty(), den.is_empty()) {
            (true, true) => String::new(),
            (false, true) => num.join("*"),
            (true, false) => format!("1/{}", den.join("/")),
            (false, false) => format!("{}/{}", num.join("*"), den.join("/")),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_dimensionless() {
            f.write_str("dimensionless")
        } else {
            f.write_str(&self.base_symbol())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unit {
    Kg,
    G,
    W,
    MilliW,
    V,
    Mm,
    M,
    S,
}

impl Unit {
    pub const ALL: [Unit; 8] = [
        Unit::Kg,
        Unit::G,
        Unit::W,
        Unit::MilliW,
        Unit::V,
        Unit::Mm,
        Unit::M,
        Unit::S,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Kg => "kg",
            Unit::G => "g",
            Unit::W => "W",
            Unit::MilliW => "mW",
            Unit::V => "V",
            Unit::Mm => "mm",
            Unit::M => "m",
            Unit::S => "s",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Kg | Unit::G => Dimension::MASS,
            Unit::W | Unit::MilliW => Dimension::POWER,
            Unit::V => Dimension::VOLTAGE,
            Unit::Mm | Unit::M => Dimension::LENGTH,
            Unit::S => Dimension::TIME,
        }
    }

    /// Exact factor converting a value in this unit to the dimension's base unit.
    pub fn factor(self) -> Decimal {
        match self {
            Unit::Kg | Unit::W | Unit::V | Unit::Mm | Unit::S => Decimal::ONE,
            Unit::G | Unit::MilliW => Decimal::new(1, 3),
            Unit::M => Decimal::from(1000),
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Unit> {
        Unit::ALL.into_iter().find(|u| u.symbol() == symbol)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = HubError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Unit::from_symbol(s).ok_or_else(|| HubError::UnknownUnit(s.to_string()))
    }
}

/// A decimal value with a unit from the table. Serialized as `"<value> <unit>"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quantity {
    pub value: Decimal,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: Decimal, unit: Unit) -> Self {
        Self { value, unit }
    }

    pub fn dimension(&self) -> Dimension {
        self.unit.dimension()
    }

    /// Value expressed in the dimension's base unit.
    pub fn to_base(&self) -> Decimal {
        self.value * self.unit.factor()
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}

impl FromStr for Quantity {
    type Err = HubError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_ascii_alphabetic())
            .ok_or_else(|| HubError::InvalidQuantity(s.to_string()))?;
        let (num, unit) = s.split_at(split);
        let value = Decimal::from_str_exact(num.trim()).map_err(|_| HubError::InvalidQuantity(s.to_string()))?;
        let unit = unit.trim().parse::<Unit>()?;
        Ok(Quantity { value, unit })
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A value in base units together with its dimension. This is what arithmetic
/// over quantities operates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measure {
    pub value: Decimal,
    pub dim: Dimension,
}

impl Measure {
    pub fn new(value: Decimal, dim: Dimension) -> Self {
        Self { value, dim }
    }

    pub fn scalar(value: Decimal) -> Self {
        Self::new(value, Dimension::NONE)
    }

    pub fn checked_add(self, rhs: Measure) -> Option<Measure> {
        (self.dim == rhs.dim).then_some(())?;
        Some(Measure::new(self.value.checked_add(rhs.value)?, self.dim))
    }

    pub fn checked_sub(self, rhs: Measure) -> Option<Measure> {
        (self.dim == rhs.dim).then_some(())?;
        Some(Measure::new(self.value.checked_sub(rhs.value)?, self.dim))
    }

    pub fn checked_mul(self, rhs: Measure) -> Option<Measure> {
        Some(Measure::new(
            self.value.checked_mul(rhs.value)?,
            self.dim.product(rhs.dim),
        ))
    }

    pub fn checked_div(self, rhs: Measure) -> Option<Measure> {
        Some(Measure::new(
            self.value.checked_div(rhs.value)?,
            self.dim.quotient(rhs.dim),
        ))
    }
}

impl From<Quantity> for Measure {
    fn from(q: Quantity) -> Self {
        Measure::new(q.to_base(), q.dimension())
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.value.normalize();
        if self.dim.is_dimensionless() {
            write!(f, "{v}")
        } else {
            write!(f, "{v} {}", self.dim.base_symbol())
        }
    }
}

// Unchecked operators for callers that already know the dimensions agree.
impl Add for Measure {
    type Output = Measure;
    fn add(self, rhs: Measure) -> Measure {
        self.checked_add(rhs).expect("measure addition")
    }
}

impl Sub for Measure {
    type Output = Measure;
    fn sub(self, rhs: Measure) -> Measure {
        self.checked_sub(rhs).expect("measure subtraction")
    }
}

impl Mul for Measure {
    type Output = Measure;
    fn mul(self, rhs: Measure) -> Measure {
        self.checked_mul(rhs).expect("measure multiplication")
    }
}

impl Div for Measure {
    type Output = Measure;
    fn div(self, rhs: Measure) -> Measure {
        self.checked_div(rhs).expect("measure division")
    }
}

const ATTRIBUTES: &[(&str, Dimension)] = &[
    ("mass", Dimension::MASS),
    ("power", Dimension::POWER),
    ("supply", Dimension::VOLTAGE),
    ("demand", Dimension::VOLTAGE),
    ("voltage", Dimension::VOLTAGE),
    ("length", Dimension::LENGTH),
    ("width", Dimension::LENGTH),
    ("height", Dimension::LENGTH),
    ("diameter", Dimension::LENGTH),
    ("thickness", Dimension::LENGTH),
    ("clearance", Dimension::LENGTH),
    ("duration", Dimension::TIME),
    ("period", Dimension::TIME),
];

/// Dimension of a known attribute. Interval bounds use the `_min` / `_max`
/// suffixes and share the dimension of their base name.
pub fn attribute_dimension(name: &str) -> Option<Dimension> {
    let base = name
        .strip_suffix("_min")
        .or_else(|| name.strip_suffix("_max"))
        .unwrap_or(name);
    ATTRIBUTES.iter().find(|(n, _)| *n == base).map(|(_, d)| *d)
}

/// Known attribute base names, in table order.
pub fn attribute_names() -> impl Iterator<Item = &'static str> {
    ATTRIBUTES.iter().map(|(n, _)| *n)
}

pub fn check_attribute(name: &str, q: &Quantity) -> Result<(), HubError> {
    let dim = attribute_dimension(name).ok_or_else(|| HubError::UnknownAttribute(name.into()))?;
    if dim != q.dimension() {
        return Err(HubError::AttributeUnit {
            name: name.to_string(),
            expected: dim.to_string(),
            unit: q.unit.to_string(),
        });
    }
    Ok(())
}

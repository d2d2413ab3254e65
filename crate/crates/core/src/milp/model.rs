//! Solver-agnostic mixed-integer linear model.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::LegRef;
use crate::num::Scalar;

pub type VarId = usize;
pub type RowId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

impl VarKind {
    #[inline]
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// Name tag of a decision variable. Structured tags print as
/// `Y[k0,l1,r2,t45]` and parse back to the same value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarTag {
    /// Installed chargers of one type at a location.
    ChargerCount {
        location: usize,
        charger: usize,
    },
    /// Binary choice to charge on a charger type in a slot before a leg.
    ChargeChoice {
        leg: LegRef,
        charger: usize,
        slot: u32,
    },
    /// Power delivered in a slot before a leg.
    Power {
        leg: LegRef,
        slot: u32,
    },
    /// Share of [`VarTag::Power`] drawn from one charger type.
    TypePower {
        leg: LegRef,
        charger: usize,
        slot: u32,
    },
    /// Indicator of a charge-to-idle transition entering `slot`.
    SwitchOff {
        leg: LegRef,
        slot: u32,
    },
    /// Indicator of an idle-to-charge transition entering `slot`.
    SwitchOn {
        leg: LegRef,
        slot: u32,
    },
    /// Planned departure time in slot units.
    Departure {
        leg: LegRef,
    },
    /// Planned arrival time in slot units.
    Arrival {
        leg: LegRef,
    },
    DepartureEnergy {
        leg: LegRef,
    },
    ArrivalEnergy {
        leg: LegRef,
    },
    ChargedEnergy {
        leg: LegRef,
    },
    /// Peak connection cost of a location.
    PeakCost {
        location: usize,
    },
    Named(String),
}

impl VarTag {
    /// Higher goes first when choosing a branching variable. Switch
    /// indicators follow from the charge choices.
    pub fn branch_priority(&self) -> u8 {
        match self {
            VarTag::ChargerCount { .. } => 2,
            VarTag::ChargeChoice { .. } => 1,
            _ => 0,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            VarTag::ChargerCount { .. } => "X",
            VarTag::ChargeChoice { .. } => "Y",
            VarTag::Power { .. } => "P",
            VarTag::TypePower { .. } => "Pr",
            VarTag::SwitchOff { .. } => "u",
            VarTag::SwitchOn { .. } => "v",
            VarTag::Departure { .. } => "tdep",
            VarTag::Arrival { .. } => "tarr",
            VarTag::DepartureEnergy { .. } => "Edep",
            VarTag::ArrivalEnergy { .. } => "Earr",
            VarTag::ChargedEnergy { .. } => "Echar",
            VarTag::PeakCost { .. } => "Cpeak",
            VarTag::Named(_) => "",
        }
    }

    pub fn leg(&self) -> Option<LegRef> {
        match *self {
            VarTag::ChargeChoice { leg, .. }
            | VarTag::Power { leg, .. }
            | VarTag::TypePower { leg, .. }
            | VarTag::SwitchOff { leg, .. }
            | VarTag::SwitchOn { leg, .. }
            | VarTag::Departure { leg }
            | VarTag::Arrival { leg }
            | VarTag::DepartureEnergy { leg }
            | VarTag::ArrivalEnergy { leg }
            | VarTag::ChargedEnergy { leg } => Some(leg),
            _ => None,
        }
    }
}

impl fmt::Display for VarTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.symbol();
        match self {
            VarTag::ChargerCount { location, charger } => write!(f, "{s}[i{location},r{charger}]"),
            VarTag::ChargeChoice { leg, charger, slot }
            | VarTag::TypePower { leg, charger, slot } => {
                write!(f, "{s}[k{},l{},r{charger},t{slot}]", leg.vehicle, leg.leg)
            }
            VarTag::Power { leg, slot }
            | VarTag::SwitchOff { leg, slot }
            | VarTag::SwitchOn { leg, slot } => {
                write!(f, "{s}[k{},l{},t{slot}]", leg.vehicle, leg.leg)
            }
            VarTag::Departure { leg }
            | VarTag::Arrival { leg }
            | VarTag::DepartureEnergy { leg }
            | VarTag::ArrivalEnergy { leg }
            | VarTag::ChargedEnergy { leg } => write!(f, "{s}[k{},l{}]", leg.vehicle, leg.leg),
            VarTag::PeakCost { location } => write!(f, "{s}[i{location}]"),
            VarTag::Named(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagParseError(pub String);

impl fmt::Display for TagParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot decode variable name {:?}", self.0)
    }
}

impl std::error::Error for TagParseError {}

/// Splits `Sym[a1,b2]` into the symbol and `(letter, value)` pairs.
fn split_indexed(s: &str) -> Option<(&str, Vec<(char, u64)>)> {
    let open = s.find('[')?;
    let body = s[open + 1..].strip_suffix(']')?;
    let mut idx = Vec::new();
    for part in body.split(',') {
        let mut chars = part.chars();
        let letter = chars.next()?;
        let value = chars.as_str().parse().ok()?;
        idx.push((letter, value));
    }
    Some((&s[..open], idx))
}

impl FromStr for VarTag {
    type Err = TagParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let Some((sym, idx)) = split_indexed(s) else {
            return Ok(VarTag::Named(s.to_string()));
        };
        let letters: String = idx.iter().map(|(c, _)| *c).collect();
        let v = |i: usize| idx[i].1 as usize;
        let leg = || LegRef {
            vehicle: v(0),
            leg: v(1),
        };
        let tag = match (sym, letters.as_str()) {
            ("X", "ir") => VarTag::ChargerCount {
                location: v(0),
                charger: v(1),
            },
            ("Y", "klrt") => VarTag::ChargeChoice {
                leg: leg(),
                charger: v(2),
                slot: idx[3].1 as u32,
            },
            ("Pr", "klrt") => VarTag::TypePower {
                leg: leg(),
                charger: v(2),
                slot: idx[3].1 as u32,
            },
            ("P", "klt") => VarTag::Power {
                leg: leg(),
                slot: idx[2].1 as u32,
            },
            ("u", "klt") => VarTag::SwitchOff {
                leg: leg(),
                slot: idx[2].1 as u32,
            },
            ("v", "klt") => VarTag::SwitchOn {
                leg: leg(),
                slot: idx[2].1 as u32,
            },
            ("tdep", "kl") => VarTag::Departure { leg: leg() },
            ("tarr", "kl") => VarTag::Arrival { leg: leg() },
            ("Edep", "kl") => VarTag::DepartureEnergy { leg: leg() },
            ("Earr", "kl") => VarTag::ArrivalEnergy { leg: leg() },
            ("Echar", "kl") => VarTag::ChargedEnergy { leg: leg() },
            ("Cpeak", "i") => VarTag::PeakCost { location: v(0) },
            _ => return Err(TagParseError(s.to_string())),
        };
        Ok(tag)
    }
}

/// Constraint family, one per group of rows produced by a builder step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// Charged energy equals slot length times delivered power.
    ChargedEnergy,
    /// Delivered power bounded by the chosen charger's rating.
    PowerCap,
    /// Per-type power bounded by that type's choice indicator.
    TypePowerCap,
    /// Delivered power equals the sum of per-type powers.
    PowerSplit,
    /// Energy after a leg stays above the reserve.
    EnergyFloor,
    /// Energy after a leg.
    EnergyBalance,
    /// Arrival energy of one leg is the departure energy of the next.
    EnergyChain,
    /// Departure energy plus charge fits in the battery.
    BatteryCap,
    /// Departure not before the end of the last charging slot.
    DepartAfterCharge,
    /// Charging not before the vehicle is back and loaded.
    ChargeAfterReady,
    /// Planned arrival after departure plus travel and slack.
    ArriveAfterTravel,
    /// Departure after previous arrival plus handling.
    DepartAfterArrival,
    /// Simultaneous use of a charger type within installed units.
    ChargerCapacity,
    /// At most one charger type per vehicle and slot.
    SingleCharger,
    /// Upper side of the transition indicator coupling.
    SwitchUpper,
    /// Lower side of the transition indicator coupling.
    SwitchLower,
    /// No direct switch between charger types.
    SwitchPair,
    /// State of energy at the start of the horizon.
    PeriodStart,
    /// State of energy at the end of the horizon.
    PeriodEnd,
    /// Epigraph of the peak connection cost.
    PeakEpigraph,
    Other,
}

impl Family {
    pub const ALL: [Family; 21] = [
        Family::ChargedEnergy,
        Family::PowerCap,
        Family::TypePowerCap,
        Family::PowerSplit,
        Family::EnergyFloor,
        Family::EnergyBalance,
        Family::EnergyChain,
        Family::BatteryCap,
        Family::DepartAfterCharge,
        Family::ChargeAfterReady,
        Family::ArriveAfterTravel,
        Family::DepartAfterArrival,
        Family::ChargerCapacity,
        Family::SingleCharger,
        Family::SwitchUpper,
        Family::SwitchLower,
        Family::SwitchPair,
        Family::PeriodStart,
        Family::PeriodEnd,
        Family::PeakEpigraph,
        Family::Other,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            Family::ChargedEnergy => "echar",
            Family::PowerCap => "pcap",
            Family::TypePowerCap => "prcap",
            Family::PowerSplit => "psplit",
            Family::EnergyFloor => "emin",
            Family::EnergyBalance => "ebal",
            Family::EnergyChain => "echain",
            Family::BatteryCap => "ebatt",
            Family::DepartAfterCharge => "depchg",
            Family::ChargeAfterReady => "chgrdy",
            Family::ArriveAfterTravel => "arrtrv",
            Family::DepartAfterArrival => "deparr",
            Family::ChargerCapacity => "xcap",
            Family::SingleCharger => "yone",
            Family::SwitchUpper => "swup",
            Family::SwitchLower => "swlo",
            Family::SwitchPair => "swuv",
            Family::PeriodStart => "per0",
            Family::PeriodEnd => "perN",
            Family::PeakEpigraph => "peak",
            Family::Other => "row",
        }
    }

    /// Family of a row name produced by [`Constraint::name`].
    pub fn of_name(name: &str) -> Family {
        let prefix = name.split('[').next().unwrap_or(name);
        Family::ALL
            .into_iter()
            .find(|f| f.prefix() == prefix && *f != Family::Other)
            .unwrap_or(Family::Other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable<T> {
    pub tag: VarTag,
    pub kind: VarKind,
    pub lower: T,
    pub upper: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint<T> {
    pub family: Family,
    /// Index label inside the brackets of the row name, e.g. `k0,l1,t3`.
    pub label: String,
    pub terms: Vec<(VarId, T)>,
    pub sense: Sense,
    pub rhs: T,
}

impl<T> Constraint<T> {
    pub fn name(&self) -> String {
        if self.family == Family::Other {
            self.label.clone()
        } else {
            format!("{}[{}]", self.family.prefix(), self.label)
        }
    }
}

/// A minimization problem over bounded continuous and integer variables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model<T> {
    pub vars: Vec<Variable<T>>,
    pub rows: Vec<Constraint<T>>,
    /// Sparse objective coefficients.
    pub objective: Vec<(VarId, T)>,
    /// Notes raised while building, such as legs that cannot charge.
    pub warnings: Vec<String>,
    #[serde(skip)]
    lookup: HashMap<VarTag, VarId>,
}

impl<T> Default for Model<T> {
    fn default() -> Self {
        Self {
            vars: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            warnings: Vec::new(),
            lookup: HashMap::new(),
        }
    }
}

impl<T: Scalar> Model<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, tag: VarTag, kind: VarKind, lower: T, upper: T) -> VarId {
        let id = self.vars.len();
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(T::zero()), upper.min(T::one())),
            _ => (lower, upper),
        };
        let previous = self.lookup.insert(tag.clone(), id);
        debug_assert!(previous.is_none(), "duplicate variable {tag}");
        self.vars.push(Variable {
            tag,
            kind,
            lower,
            upper,
        });
        id
    }

    pub fn add_row(
        &mut self,
        family: Family,
        label: impl Into<String>,
        terms: Vec<(VarId, T)>,
        sense: Sense,
        rhs: T,
    ) -> RowId {
        debug_assert!(terms.iter().all(|&(v, _)| v < self.vars.len()));
        self.rows.push(Constraint {
            family,
            label: label.into(),
            terms,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn set_objective(&mut self, var: VarId, coeff: T) {
        match self.objective.iter_mut().find(|(v, _)| *v == var) {
            Some(entry) => entry.1 = coeff,
            None => self.objective.push((var, coeff)),
        }
    }

    pub fn find(&self, tag: &VarTag) -> Option<VarId> {
        self.lookup.get(tag).copied()
    }

    pub fn var_name(&self, id: VarId) -> String {
        self.vars[id].tag.to_string()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows_in(&self, family: Family) -> impl Iterator<Item = (RowId, &Constraint<T>)> {
        self.rows
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.family == family)
    }

    pub fn count_rows(&self, family: Family) -> usize {
        self.rows_in(family).count()
    }

    pub fn count_vars(&self, symbol: &str) -> usize {
        self.vars
            .iter()
            .filter(|v| v.tag.symbol() == symbol)
            .count()
    }

    pub fn integer_vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind.is_integral())
            .map(|(i, _)| i)
    }

    /// Dense objective vector.
    pub fn cost_vector(&self) -> Vec<T> {
        let mut c = vec![T::zero(); self.vars.len()];
        for &(v, a) in &self.objective {
            c[v] = c[v] + a;
        }
        c
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective
            .iter()
            .fold(T::zero(), |acc, &(v, a)| acc + a * x[v])
    }

    pub fn row_activity(&self, row: RowId, x: &[T]) -> T {
        self.rows[row]
            .terms
            .iter()
            .fold(T::zero(), |acc, &(v, a)| acc + a * x[v])
    }

    pub fn lower_bounds(&self) -> Vec<T> {
        self.vars.iter().map(|v| v.lower).collect()
    }

    pub fn upper_bounds(&self) -> Vec<T> {
        self.vars.iter().map(|v| v.upper).collect()
    }

    /// Rebuilds the tag lookup (needed after deserialization).
    pub fn reindex(&mut self) {
        self.lookup = self
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.tag.clone(), i))
            .collect();
    }

    /// Converts the model to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let c = |x: T| U::of(x.as_f64());
        Model {
            vars: self
                .vars
                .iter()
                .map(|v| Variable {
                    tag: v.tag.clone(),
                    kind: v.kind,
                    lower: c(v.lower),
                    upper: c(v.upper),
                })
                .collect(),
            rows: self
                .rows
                .iter()
                .map(|r| Constraint {
                    family: r.family,
                    label: r.label.clone(),
                    terms: r.terms.iter().map(|&(v, a)| (v, c(a))).collect(),
                    sense: r.sense,
                    rhs: c(r.rhs),
                })
                .collect(),
            objective: self.objective.iter().map(|&(v, a)| (v, c(a))).collect(),
            warnings: self.warnings.clone(),
            lookup: self.lookup.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn leg_strategy() -> impl Strategy<Value = LegRef> {
        (0usize..500, 0usize..80).prop_map(|(vehicle, leg)| LegRef { vehicle, leg })
    }

    fn tag_strategy() -> impl Strategy<Value = VarTag> {
        prop_oneof![
            (0usize..400, 0usize..8)
                .prop_map(|(location, charger)| VarTag::ChargerCount { location, charger }),
            (leg_strategy(), 0usize..8, 0u32..2000)
                .prop_map(|(leg, charger, slot)| VarTag::ChargeChoice { leg, charger, slot }),
            (leg_strategy(), 0usize..8, 0u32..2000)
                .prop_map(|(leg, charger, slot)| VarTag::TypePower { leg, charger, slot }),
            (leg_strategy(), 0u32..2000).prop_map(|(leg, slot)| VarTag::Power { leg, slot }),
            (leg_strategy(), 0u32..2000).prop_map(|(leg, slot)| VarTag::SwitchOff { leg, slot }),
            (leg_strategy(), 0u32..2000).prop_map(|(leg, slot)| VarTag::SwitchOn { leg, slot }),
            leg_strategy().prop_map(|leg| VarTag::Departure { leg }),
            leg_strategy().prop_map(|leg| VarTag::Arrival { leg }),
            leg_strategy().prop_map(|leg| VarTag::DepartureEnergy { leg }),
            leg_strategy().prop_map(|leg| VarTag::ArrivalEnergy { leg }),
            leg_strategy().prop_map(|leg| VarTag::ChargedEnergy { leg }),
            (0usize..400).prop_map(|location| VarTag::PeakCost { location }),
        ]
    }

    proptest! {
        #[test]
        fn tag_names_round_trip(tag in tag_strategy()) {
            let name = tag.to_string();
            prop_assert_eq!(name.parse::<VarTag>().unwrap(), tag);
        }
    }

    #[test]
    fn plain_names_stay_named() {
        assert_eq!("x".parse::<VarTag>().unwrap(), VarTag::Named("x".into()));
        assert!("Y[k0,l1]".parse::<VarTag>().is_err());
    }

    #[test]
    fn family_prefix_round_trip() {
        for f in Family::ALL {
            if f != Family::Other {
                assert_eq!(Family::of_name(&format!("{}[k0,l0]", f.prefix())), f);
            }
        }
        assert_eq!(Family::of_name("c1"), Family::Other);
    }

    #[test]
    fn binary_bounds_are_clamped() {
        let mut m = Model::<f64>::new();
        let y = m.add_var(VarTag::Named("y".into()), VarKind::Binary, -3.0, 5.0);
        assert_eq!((m.vars[y].lower, m.vars[y].upper), (0.0, 1.0));
        assert_eq!(m.find(&VarTag::Named("y".into())), Some(y));
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Solvent {
    EtOH,
    MeOH,
    MC,
    THF,
}

impl Solvent {
    pub const ALL: [Solvent; 4] = [Solvent::EtOH, Solvent::MeOH, Solvent::MC, Solvent::THF];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Solvent::EtOH => "EtOH",
            Solvent::MeOH => "MeOH",
            Solvent::MC => "MC",
            Solvent::THF => "THF",
        }
    }
}

/// Target compounds. Declaration order is the multi-hot layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Solute {
    Dmmp,
    Dfp,
    Cees,
    Ceps,
    Nitrophenol,
    Ethylenediamine,
}

impl Solute {
    pub const ALL: [Solute; 6] = [
        Solute::Dmmp,
        Solute::Dfp,
        Solute::Cees,
        Solute::Ceps,
        Solute::Nitrophenol,
        Solute::Ethylenediamine,
    ];

    /// Column order used by detection reports.
    pub const REPORT_ORDER: [Solute; 6] = [
        Solute::Cees,
        Solute::Ceps,
        Solute::Dfp,
        Solute::Dmmp,
        Solute::Nitrophenol,
        Solute::Ethylenediamine,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Solute::Dmmp => "DMMP",
            Solute::Dfp => "DFP",
            Solute::Cees => "2-CEES",
            Solute::Ceps => "2-CEPS",
            Solute::Nitrophenol => "4-nitrophenol",
            Solute::Ethylenediamine => "ethylenediamine",
        }
    }

    /// Improvised-explosive related agents, kept away from reactive interferents.
    pub fn is_ied(self) -> bool {
        matches!(self, Solute::Nitrophenol | Solute::Ethylenediamine)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Interference {
    #[default]
    None,
    Brick,
    Soil,
    Grass,
    Asphalt,
    Kerosene,
    Acetone,
}

impl Interference {
    pub const ALL: [Interference; 7] = [
        Interference::None,
        Interference::Brick,
        Interference::Soil,
        Interference::Grass,
        Interference::Asphalt,
        Interference::Kerosene,
        Interference::Acetone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Interference::None => "none",
            Interference::Brick => "brick",
            Interference::Soil => "soil",
            Interference::Grass => "grass",
            Interference::Asphalt => "asphalt",
            Interference::Kerosene => "kerosene",
            Interference::Acetone => "acetone",
        }
    }
}

macro_rules! name_parsing {
    ($ty:ty, $what:literal) => {
        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let s = s.trim();
                <$ty>::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name().eq_ignore_ascii_case(s))
                    .ok_or_else(|| Error::contract(format!("unknown {} '{}'", $what, s)))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(self.name())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

name_parsing!(Solvent, "solvent");
name_parsing!(Solute, "solute");
name_parsing!(Interference, "interference");

/// Experimental condition: one solvent, a non-empty solute set and an interferent tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ConditionLabel {
    solvent: Solvent,
    solutes: Vec<Solute>,
    interference: Interference,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabel {
    solvent: Solvent,
    solutes: Vec<Solute>,
    #[serde(default)]
    interference: Interference,
}

impl<'de> Deserialize<'de> for ConditionLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawLabel::deserialize(d)?;
        ConditionLabel::new(raw.solvent, &raw.solutes, raw.interference)
            .map_err(serde::de::Error::custom)
    }
}

impl ConditionLabel {
    pub fn new(solvent: Solvent, solutes: &[Solute], interference: Interference) -> Result<Self> {
        if solutes.is_empty() {
            return Err(Error::contract("a condition needs at least one solute"));
        }
        let mut solutes = solutes.to_vec();
        solutes.sort();
        solutes.dedup();
        if solutes.iter().any(|s| s.is_ied())
            && matches!(interference, Interference::Brick | Interference::Acetone)
        {
            return Err(Error::contract(format!(
                "IED agents are not combined with {interference}"
            )));
        }
        Ok(Self {
            solvent,
            solutes,
            interference,
        })
    }

    pub fn clean(solvent: Solvent, solutes: &[Solute]) -> Result<Self> {
        Self::new(solvent, solutes, Interference::None)
    }

    /// Rebuilds a label from one-hot / multi-hot vectors (entries > 0.5 are set).
    pub fn from_vectors(solvent: &[f64], solutes: &[f64], interference: Interference) -> Result<Self> {
        if solvent.len() != 4 || solutes.len() != 6 {
            return Err(Error::contract("expected solvent dim 4 and solute dim 6"));
        }
        let on: Vec<usize> = (0..4).filter(|&i| solvent[i] > 0.5).collect();
        if on.len() != 1 {
            return Err(Error::contract("solvent vector must be one-hot"));
        }
        let picked: Vec<Solute> = Solute::ALL
            .iter()
            .copied()
            .filter(|s| solutes[s.index()] > 0.5)
            .collect();
        Self::new(Solvent::ALL[on[0]], &picked, interference)
    }

    pub fn solvent(&self) -> Solvent {
        self.solvent
    }

    pub fn solutes(&self) -> &[Solute] {
        &self.solutes
    }

    pub fn interference(&self) -> Interference {
        self.interference
    }

    pub fn with_interference(&self, interference: Interference) -> Result<Self> {
        Self::new(self.solvent, &self.solutes, interference)
    }

    pub fn solvent_one_hot(&self) -> [f64; 4] {
        let mut v = [0.0; 4];
        v[self.solvent.index()] = 1.0;
        v
    }

    pub fn solute_multi_hot(&self) -> [f64; 6] {
        let mut v = [0.0; 6];
        for s in &self.solutes {
            v[s.index()] = 1.0;
        }
        v
    }

    pub fn has(&self, solute: Solute) -> bool {
        self.solutes.contains(&solute)
    }

    /// Comma-joined solute names, as stored in the record table.
    pub fn solute_field(&self) -> String {
        self.solutes
            .iter()
            .map(|s| s.name())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Key identifying the condition irrespective of interference.
    pub fn base_key(&self) -> (Solvent, Vec<Solute>) {
        (self.solvent, self.solutes.clone())
    }

    /// The sixteen solute/solvent combinations evaluated for generation quality.
    pub fn evaluation_conditions() -> Vec<ConditionLabel> {
        use Solute::*;
        use Solvent::*;
        let solvents = [EtOH, MC, MeOH, THF];
        let mut out = Vec::with_capacity(16);
        for single in [Nitrophenol, Ethylenediamine, Cees] {
            for solvent in solvents {
                out.push(ConditionLabel::clean(solvent, &[single]).expect("valid"));
            }
        }
        let mixtures: [(Solvent, &[Solute]); 4] = [
            (EtOH, &[Cees, Ceps]),
            (MeOH, &[Cees, Ceps, Dfp]),
            (THF, &[Ceps, Dfp, Dmmp]),
            (MC, &[Cees, Ceps, Dfp, Dmmp]),
        ];
        for (solvent, solutes) in mixtures {
            out.push(ConditionLabel::clean(solvent, solutes).expect("valid"));
        }
        out
    }
}

/// Human-readable form, e.g. `2-CEES + 2-CEPS + EtOH` or `DMMP + MC @ soil`.
impl fmt::Display for ConditionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.solutes {
            write!(f, "{} + ", s.name())?;
        }
        f.write_str(self.solvent.name())?;
        if self.interference != Interference::None {
            write!(f, " @ {}", self.interference)?;
        }
        Ok(())
    }
}

/// Parses the display form. Tokens are separated by `+`; the interferent follows `@`.
impl FromStr for ConditionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (body, interference) = match s.split_once('@') {
            Some((b, i)) => (b, i.parse()?),
            None => (s, Interference::None),
        };
        let mut solvent = None;
        let mut solutes = Vec::new();
        for tok in body.split('+').map(str::trim).filter(|t| !t.is_empty()) {
            if let Ok(sv) = tok.parse::<Solvent>() {
                if solvent.replace(sv).is_some() {
                    return Err(Error::contract(format!("more than one solvent in '{s}'")));
                }
            } else {
                solutes.push(tok.parse::<Solute>()?);
            }
        }
        let solvent = solvent.ok_or_else(|| Error::contract(format!("no solvent in '{s}'")))?;
        ConditionLabel::new(solvent, &solutes, interference)
    }
}

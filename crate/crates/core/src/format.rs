// SPDX-License-Identifier: Apache-2.0

//! JSON documents read and written by the command-line tool.
//!
//! Labels are written as `"inf"`, a coefficient list such as `[1, 0]`, a list
//! of per-slot labels for product settings, or a free-form string for
//! measurements that do not come from a suite.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cmat::CMatrix;
use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::mub::{Label, MeasurementFamily};
use crate::recon::{ProbabilityTable, System};
use crate::weyl::ExtendedLabel;

pub const FORMAT_VERSION: u32 = 1;

const INFINITY: &str = "inf";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotRepr {
    Coeffs(Vec<u32>),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelRepr {
    Coeffs(Vec<u32>),
    Slots(Vec<SlotRepr>),
    Text(String),
}

impl From<&ExtendedLabel> for SlotRepr {
    fn from(a: &ExtendedLabel) -> Self {
        match a {
            ExtendedLabel::Finite(x) => SlotRepr::Coeffs(x.coeffs().to_vec()),
            ExtendedLabel::Infinity => SlotRepr::Text(INFINITY.into()),
        }
    }
}

impl From<&Label> for LabelRepr {
    fn from(l: &Label) -> Self {
        match l {
            Label::Single(ExtendedLabel::Finite(x)) => LabelRepr::Coeffs(x.coeffs().to_vec()),
            Label::Single(ExtendedLabel::Infinity) => LabelRepr::Text(INFINITY.into()),
            Label::Product(parts) => LabelRepr::Slots(parts.iter().map(SlotRepr::from).collect()),
            Label::Name(s) => LabelRepr::Text(s.clone()),
        }
    }
}

impl SlotRepr {
    fn resolve(&self, field: &FieldSpec) -> Result<ExtendedLabel> {
        match self {
            SlotRepr::Coeffs(c) => Ok(ExtendedLabel::Finite(field.element(c)?)),
            SlotRepr::Text(s) if s == INFINITY => Ok(ExtendedLabel::Infinity),
            SlotRepr::Text(s) => Err(Error::InvalidLabel(format!("unknown slot label {s:?}"))),
        }
    }
}

impl LabelRepr {
    /// Interpret against the fields of a system: one field for a prime-power
    /// suite, one per slot for a composite one.
    pub fn resolve(&self, fields: &[FieldSpec]) -> Result<Label> {
        match (self, fields) {
            (LabelRepr::Coeffs(c), [f]) => Ok(Label::Single(ExtendedLabel::Finite(f.element(c)?))),
            (LabelRepr::Text(s), [_]) if s == INFINITY => {
                Ok(Label::Single(ExtendedLabel::Infinity))
            }
            (LabelRepr::Slots(parts), _) if parts.len() == fields.len() && fields.len() > 1 => {
                parts
                    .iter()
                    .zip(fields)
                    .map(|(p, f)| p.resolve(f))
                    .collect::<Result<Vec<_>>>()
                    .map(Label::Product)
            }
            (LabelRepr::Slots(parts), [f]) if parts.len() == 1 => {
                Ok(Label::Product(vec![parts[0].resolve(f)?]))
            }
            (LabelRepr::Text(s), _) => Ok(Label::Name(s.clone())),
            _ => Err(Error::InvalidLabel(format!(
                "{} does not fit a system with {} slot(s)",
                serde_json::to_string(self).unwrap_or_default(),
                fields.len()
            ))),
        }
    }

    /// Fallback for files without field information.
    pub fn to_name(&self) -> Label {
        match self {
            LabelRepr::Text(s) => Label::Name(s.clone()),
            other => Label::Name(serde_json::to_string(other).unwrap_or_default()),
        }
    }
}

fn resolve_or_name(repr: &LabelRepr, fields: &[FieldSpec]) -> Result<Label> {
    if fields.is_empty() {
        Ok(repr.to_name())
    } else {
        repr.resolve(fields)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub label: LabelRepr,
    pub projectors: Vec<CMatrix>,
}

/// A list of measurement families, as produced by `gen`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteFile {
    pub format_version: u32,
    pub d: usize,
    /// Slot fields; empty for hand-made families.
    #[serde(default)]
    pub fields: Vec<FieldSpec>,
    pub families: Vec<FamilyRecord>,
}

impl SuiteFile {
    pub fn from_system(system: &System) -> Result<Self> {
        Ok(Self {
            format_version: FORMAT_VERSION,
            d: system.dim(),
            fields: system.fields(),
            families: system
                .families()?
                .iter()
                .map(|f| FamilyRecord {
                    label: LabelRepr::from(f.label()),
                    projectors: f.projectors().to_vec(),
                })
                .collect(),
        })
    }

    /// Validate every family and resolve its label.
    pub fn families(&self) -> Result<Vec<MeasurementFamily>> {
        check_version(self.format_version)?;
        self.families
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let label = resolve_or_name(&rec.label, &self.fields)?;
                if rec
                    .projectors
                    .iter()
                    .any(|p| p.rows() != self.d || p.cols() != self.d)
                {
                    return Err(Error::DimensionMismatch(format!(
                        "family #{i} ({label}) has projectors not of size {0}x{0}",
                        self.d
                    )));
                }
                MeasurementFamily::new(label.clone(), rec.projectors.clone()).map_err(|e| match e {
                    Error::InvalidMeasurement(m) => {
                        Error::InvalidMeasurement(format!("family #{i} ({label}): {m}"))
                    }
                    other => other,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingRecord {
    pub label: LabelRepr,
    pub probs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityFile {
    pub format_version: u32,
    pub settings: Vec<SettingRecord>,
}

impl ProbabilityFile {
    /// Settings are written in the system's setting order.
    pub fn from_table(table: &ProbabilityTable, system: &System) -> Self {
        let settings = system
            .setting_labels()
            .iter()
            .filter_map(|l| {
                table.get(l).map(|p| SettingRecord {
                    label: LabelRepr::from(l),
                    probs: p.to_vec(),
                })
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            settings,
        }
    }

    /// Resolve labels against the system and check each row is a distribution.
    pub fn to_table(&self, system: &System) -> Result<ProbabilityTable> {
        check_version(self.format_version)?;
        let fields = system.fields();
        let mut seen = BTreeSet::new();
        let mut table = ProbabilityTable::new();
        for rec in &self.settings {
            let label = rec.label.resolve(&fields)?;
            if !seen.insert(label.clone()) {
                return Err(Error::InvalidTable(format!(
                    "setting {label} appears twice"
                )));
            }
            table.insert(label, rec.probs.clone());
        }
        table.validate_distributions()?;
        Ok(table)
    }
}

/// The measurement layout for `reconstruct`: just the dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub d: u64,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

pub fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported format_version {v} (expected {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

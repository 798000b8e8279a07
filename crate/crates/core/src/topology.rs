//! Chimera hardware graph bookkeeping: qubit ids, unit-cell coordinates and
//! orientation. Couplers are not modeled.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CELL_SIZE: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Vertical,
    Horizontal,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Vertical => "vertical",
            Orientation::Horizontal => "horizontal",
        })
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertical" => Ok(Orientation::Vertical),
            "horizontal" => Ok(Orientation::Horizontal),
            other => Err(Error::invalid("orientation", format!("unknown value {other:?}"))),
        }
    }
}

/// Which half of a unit cell is vertical. Device id conventions differ, so
/// this is a setting rather than a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationConvention {
    /// Slots 0-3 vertical, 4-7 horizontal.
    #[default]
    LowerVertical,
    /// Slots 0-3 horizontal, 4-7 vertical.
    LowerHorizontal,
}

impl OrientationConvention {
    pub fn orientation(self, k: u32) -> Orientation {
        let lower = k < CELL_SIZE / 2;
        match (self, lower) {
            (OrientationConvention::LowerVertical, true)
            | (OrientationConvention::LowerHorizontal, false) => Orientation::Vertical,
            _ => Orientation::Horizontal,
        }
    }
}

impl FromStr for OrientationConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower-vertical" | "k<4-vertical" => Ok(OrientationConvention::LowerVertical),
            "lower-horizontal" | "k<4-horizontal" => Ok(OrientationConvention::LowerHorizontal),
            other => Err(Error::ChipSpec(format!(
                "unknown orientation convention {other:?} (expected lower-vertical or lower-horizontal)"
            ))),
        }
    }
}

impl fmt::Display for OrientationConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrientationConvention::LowerVertical => "lower-vertical",
            OrientationConvention::LowerHorizontal => "lower-horizontal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QubitSite {
    pub id: u32,
    pub row: u32,
    pub col: u32,
    pub k: u32,
    pub orientation: Orientation,
}

/// An `n × n` Chimera chip together with the set of qubits that actually work.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChimeraSpec {
    grid: u32,
    operational: BTreeSet<u32>,
    convention: OrientationConvention,
}

impl ChimeraSpec {
    /// Fully populated chip.
    pub fn full(grid: u32) -> Result<Self> {
        if grid == 0 {
            return Err(Error::ChipSpec("grid size must be at least 1".into()));
        }
        let capacity = grid
            .checked_mul(grid)
            .and_then(|c| c.checked_mul(CELL_SIZE))
            .ok_or_else(|| Error::ChipSpec(format!("grid size {grid} is too large")))?;
        Ok(Self {
            grid,
            operational: (0..capacity).collect(),
            convention: OrientationConvention::default(),
        })
    }

    pub fn with_operational(grid: u32, operational: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut spec = Self::full(grid)?;
        let capacity = spec.capacity();
        let operational: BTreeSet<u32> = operational.into_iter().collect();
        if let Some(&id) = operational.iter().find(|&&id| id >= capacity) {
            return Err(Error::QubitOutOfRange { id, capacity });
        }
        spec.operational = operational;
        Ok(spec)
    }

    /// Full chip minus the listed broken qubits.
    pub fn without(grid: u32, missing: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut spec = Self::full(grid)?;
        let capacity = spec.capacity();
        for id in missing {
            if id >= capacity {
                return Err(Error::QubitOutOfRange { id, capacity });
            }
            spec.operational.remove(&id);
        }
        Ok(spec)
    }

    pub fn with_convention(mut self, convention: OrientationConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn grid(&self) -> u32 {
        self.grid
    }

    pub fn capacity(&self) -> u32 {
        CELL_SIZE * self.grid * self.grid
    }

    pub fn convention(&self) -> OrientationConvention {
        self.convention
    }

    pub fn operational(&self) -> &BTreeSet<u32> {
        &self.operational
    }

    pub fn is_operational(&self, id: u32) -> bool {
        self.operational.contains(&id)
    }

    pub fn site_of(&self, id: u32) -> Result<QubitSite> {
        if id >= self.capacity() {
            return Err(Error::QubitOutOfRange {
                id,
                capacity: self.capacity(),
            });
        }
        let cell = id / CELL_SIZE;
        let k = id % CELL_SIZE;
        Ok(QubitSite {
            id,
            row: cell / self.grid,
            col: cell % self.grid,
            k,
            orientation: self.convention.orientation(k),
        })
    }

    pub fn id_of(&self, row: u32, col: u32, k: u32) -> Result<u32> {
        if row >= self.grid || col >= self.grid || k >= CELL_SIZE {
            return Err(Error::ChipSpec(format!(
                "site ({row}, {col}, {k}) is outside a {n}x{n} chip",
                n = self.grid
            )));
        }
        Ok(CELL_SIZE * (self.grid * row + col) + k)
    }

    /// Operational ids split by orientation: `(horizontal, vertical)`.
    pub fn orientation_groups(&self) -> (Vec<u32>, Vec<u32>) {
        self.operational
            .iter()
            .partition(|&&id| self.convention.orientation(id % CELL_SIZE) == Orientation::Horizontal)
    }

    /// One record per site of the chip, carrying the value for that qubit if any.
    pub fn heatmap_grid(&self, values: &BTreeMap<u32, f64>) -> Result<Vec<HeatmapRecord>> {
        if let Some(&id) = values.keys().find(|&&id| !self.is_operational(id)) {
            return Err(if id >= self.capacity() {
                Error::QubitOutOfRange {
                    id,
                    capacity: self.capacity(),
                }
            } else {
                Error::invalid("heatmap", format!("qubit {id} is not operational on this chip"))
            });
        }
        (0..self.capacity())
            .map(|id| {
                let site = self.site_of(id)?;
                Ok(HeatmapRecord {
                    id,
                    row: site.row,
                    col: site.col,
                    k: site.k,
                    orientation: site.orientation,
                    value: values.get(&id).copied(),
                })
            })
            .collect()
    }
}

impl FromStr for ChimeraSpec {
    type Err = Error;

    /// Parses `chimera:<n>`.
    fn from_str(s: &str) -> Result<Self> {
        let n = s
            .strip_prefix("chimera:")
            .ok_or_else(|| Error::ChipSpec(format!("expected chimera:<n>, got {s:?}")))?;
        let grid: u32 = n
            .parse()
            .map_err(|_| Error::ChipSpec(format!("bad grid size {n:?} in {s:?}")))?;
        Self::full(grid)
    }
}

/// Plot-ready heatmap cell. `value` is `None` for qubits without data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatmapRecord {
    pub id: u32,
    pub row: u32,
    pub col: u32,
    pub k: u32,
    pub orientation: Orientation,
    pub value: Option<f64>,
}

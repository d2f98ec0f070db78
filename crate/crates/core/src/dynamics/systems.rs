//! The 16 feature-system variants: which energy terms join the cepstra and
//! how many delta orders are appended.

use crate::energy::EnergyTerms;
use crate::error::{Error, Result};
use crate::frontend::{CepstralFrame, NUM_CEPSTRA};

use super::{delta, DeltaSpec};

/// How many delta orders a system appends to its static features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaOrder {
    None,
    First,
    FirstAndSecond,
}

/// One of the 16 system variants.
///
/// Static features are ordered c1..c7, then frequency-domain energy, then
/// time-domain energy, then differential energy, each when included. First
/// deltas cover every static feature; second deltas do too except where
/// `diff_energy_second_delta` drops the differential-energy column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSystemConfig {
    pub id: u8,
    pub freq_energy: bool,
    pub time_energy: bool,
    pub diff_energy: bool,
    pub deltas: DeltaOrder,
    pub diff_energy_second_delta: bool,
}

impl FeatureSystemConfig {
    /// Look up a system by its 1-based identifier.
    pub fn system(id: u8) -> Result<Self> {
        let (freq_energy, time_energy, diff_energy, deltas, diff_energy_second_delta) = match id {
            1 => (false, false, false, DeltaOrder::None, true),
            2 => (true, false, false, DeltaOrder::None, true),
            3 => (false, true, false, DeltaOrder::None, true),
            4 => (false, false, true, DeltaOrder::None, true),
            5 => (true, false, true, DeltaOrder::None, true),
            6 => (false, false, false, DeltaOrder::First, true),
            7 => (true, false, false, DeltaOrder::First, true),
            8 => (false, true, false, DeltaOrder::First, true),
            9 => (false, false, true, DeltaOrder::First, true),
            10 => (true, false, true, DeltaOrder::First, true),
            11 => (false, false, false, DeltaOrder::FirstAndSecond, true),
            12 => (true, false, false, DeltaOrder::FirstAndSecond, true),
            13 => (false, true, false, DeltaOrder::FirstAndSecond, true),
            14 => (false, false, true, DeltaOrder::FirstAndSecond, true),
            15 => (true, false, true, DeltaOrder::FirstAndSecond, true),
            16 => (true, false, true, DeltaOrder::FirstAndSecond, false),
            other => {
                return Err(Error::Config(format!(
                    "feature system must be 1..=16, got {other}"
                )))
            }
        };
        Ok(FeatureSystemConfig {
            id,
            freq_energy,
            time_energy,
            diff_energy,
            deltas,
            diff_energy_second_delta,
        })
    }

    /// Width of the static block.
    pub fn static_dim(&self) -> usize {
        NUM_CEPSTRA
            + usize::from(self.freq_energy)
            + usize::from(self.time_energy)
            + usize::from(self.diff_energy)
    }

    /// Total feature vector width.
    pub fn dim(&self) -> usize {
        let statics = self.static_dim();
        match self.deltas {
            DeltaOrder::None => statics,
            DeltaOrder::First => 2 * statics,
            DeltaOrder::FirstAndSecond => {
                let dropped = usize::from(self.diff_energy && !self.diff_energy_second_delta);
                3 * statics - dropped
            }
        }
    }

    /// Human-readable summary of what the system includes.
    pub fn description(&self) -> String {
        let mut parts = vec!["cepstra".to_string()];
        if self.freq_energy {
            parts.push("freq energy".into());
        }
        if self.time_energy {
            parts.push("time energy".into());
        }
        if self.diff_energy {
            parts.push("diff energy".into());
        }
        let statics = parts.join(" + ");
        match self.deltas {
            DeltaOrder::None => statics,
            DeltaOrder::First => format!("{statics}, first deltas"),
            DeltaOrder::FirstAndSecond => {
                if self.diff_energy && !self.diff_energy_second_delta {
                    format!("{statics}, both deltas (no second delta on diff energy)")
                } else {
                    format!("{statics}, both deltas")
                }
            }
        }
    }
}

/// Build the per-frame feature matrix for one system.
///
/// `cepstra` and `energies` must be frame-aligned. Delta blocks are computed
/// over the full static vectors, so an energy term's delta sits next to the
/// cepstral deltas in one contiguous block per order.
pub fn assemble(
    cepstra: &[CepstralFrame],
    energies: &[EnergyTerms],
    config: &FeatureSystemConfig,
    deltas: &DeltaSpec,
) -> Result<Vec<Vec<f64>>> {
    deltas.validate()?;
    if cepstra.len() != energies.len() {
        return Err(Error::LengthMismatch {
            left: cepstra.len(),
            right: energies.len(),
        });
    }
    if cepstra.is_empty() {
        return Err(Error::EmptySignal);
    }

    let statics: Vec<Vec<f64>> = cepstra
        .iter()
        .zip(energies)
        .map(|(c, e)| {
            let mut row = Vec::with_capacity(config.static_dim());
            row.extend_from_slice(&c.cepstra);
            if config.freq_energy {
                row.push(e.freq);
            }
            if config.time_energy {
                row.push(e.time);
            }
            if config.diff_energy {
                row.push(e.diff);
            }
            row
        })
        .collect();

    let mut rows = statics.clone();
    if matches!(config.deltas, DeltaOrder::None) {
        return Ok(rows);
    }

    let first = delta(&statics, deltas.n_first)?;
    for (row, d) in rows.iter_mut().zip(&first) {
        row.extend_from_slice(d);
    }
    if matches!(config.deltas, DeltaOrder::FirstAndSecond) {
        let second = delta(&first, deltas.n_second)?;
        // The differential-energy column is the last static feature, so
        // dropping its second delta truncates each second-order row by one.
        let keep = if config.diff_energy && !config.diff_energy_second_delta {
            config.static_dim() - 1
        } else {
            config.static_dim()
        };
        for (row, dd) in rows.iter_mut().zip(&second) {
            row.extend_from_slice(&dd[..keep]);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIMS: [(u8, usize); 16] = [
        (1, 7),
        (2, 8),
        (3, 8),
        (4, 8),
        (5, 9),
        (6, 14),
        (7, 16),
        (8, 16),
        (9, 16),
        (10, 18),
        (11, 21),
        (12, 24),
        (13, 24),
        (14, 24),
        (15, 27),
        (16, 26),
    ];

    fn fixture(len: usize) -> (Vec<CepstralFrame>, Vec<EnergyTerms>) {
        let cepstra = (0..len)
            .map(|t| {
                let mut c = [0.0; NUM_CEPSTRA];
                for (j, slot) in c.iter_mut().enumerate() {
                    *slot = (t as f64 * 0.4 + j as f64).sin();
                }
                CepstralFrame { cepstra: c }
            })
            .collect();
        let energies = (0..len)
            .map(|t| EnergyTerms {
                time: t as f64 * 0.1,
                freq: (t as f64 * 0.2).cos(),
                diff: (t % 5) as f64,
            })
            .collect();
        (cepstra, energies)
    }

    #[test]
    fn dimension_ledger() {
        for (id, dim) in DIMS {
            let config = FeatureSystemConfig::system(id).unwrap();
            assert_eq!(config.dim(), dim, "system {id}");
            assert_eq!(config.id, id);
        }
        assert!(FeatureSystemConfig::system(0).is_err());
        assert!(FeatureSystemConfig::system(17).is_err());
    }

    #[test]
    fn assembled_rows_match_declared_dim() {
        let (cepstra, energies) = fixture(30);
        let deltas = DeltaSpec::default();
        for (id, dim) in DIMS {
            let config = FeatureSystemConfig::system(id).unwrap();
            let rows = assemble(&cepstra, &energies, &config, &deltas).unwrap();
            assert_eq!(rows.len(), 30);
            for row in &rows {
                assert_eq!(row.len(), dim, "system {id}");
            }
        }
    }

    #[test]
    fn static_order_is_cepstra_then_energies() {
        let (cepstra, energies) = fixture(12);
        let config = FeatureSystemConfig::system(5).unwrap();
        let rows = assemble(&cepstra, &energies, &config, &DeltaSpec::default()).unwrap();
        for (t, row) in rows.iter().enumerate() {
            assert_eq!(&row[..7], &cepstra[t].cepstra);
            assert_eq!(row[7], energies[t].freq);
            assert_eq!(row[8], energies[t].diff);
        }
        let config = FeatureSystemConfig::system(3).unwrap();
        let rows = assemble(&cepstra, &energies, &config, &DeltaSpec::default()).unwrap();
        for (t, row) in rows.iter().enumerate() {
            assert_eq!(row[7], energies[t].time);
        }
    }

    #[test]
    fn delta_blocks_extend_statics() {
        let (cepstra, energies) = fixture(25);
        let deltas = DeltaSpec::default();
        let base = assemble(
            &cepstra,
            &energies,
            &FeatureSystemConfig::system(5).unwrap(),
            &deltas,
        )
        .unwrap();
        let with_first = assemble(
            &cepstra,
            &energies,
            &FeatureSystemConfig::system(10).unwrap(),
            &deltas,
        )
        .unwrap();
        let with_both = assemble(
            &cepstra,
            &energies,
            &FeatureSystemConfig::system(15).unwrap(),
            &deltas,
        )
        .unwrap();
        for t in 0..25 {
            assert_eq!(&with_first[t][..9], &base[t][..]);
            assert_eq!(&with_both[t][..18], &with_first[t][..]);
        }
    }

    #[test]
    fn last_system_drops_only_diff_energy_curvature() {
        let (cepstra, energies) = fixture(25);
        let deltas = DeltaSpec::default();
        let full = assemble(
            &cepstra,
            &energies,
            &FeatureSystemConfig::system(15).unwrap(),
            &deltas,
        )
        .unwrap();
        let trimmed = assemble(
            &cepstra,
            &energies,
            &FeatureSystemConfig::system(16).unwrap(),
            &deltas,
        )
        .unwrap();
        for t in 0..25 {
            assert_eq!(trimmed[t].len(), 26);
            assert_eq!(&trimmed[t][..], &full[t][..26]);
        }
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let (cepstra, mut energies) = fixture(10);
        energies.pop();
        let config = FeatureSystemConfig::system(1).unwrap();
        assert!(matches!(
            assemble(&cepstra, &energies, &config, &DeltaSpec::default()),
            Err(Error::LengthMismatch { left: 10, right: 9 })
        ));
    }

    #[test]
    fn descriptions_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for id in 1..=16 {
            let d = FeatureSystemConfig::system(id).unwrap().description();
            assert!(seen.insert(d.clone()), "duplicate description: {d}");
        }
    }
}

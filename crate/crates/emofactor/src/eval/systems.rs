//! The fixed nine-system ablation grid: one raw-feature baseline plus the
//! eight factor-mask combinations of the reconstruction pipeline.

use serde::{Deserialize, Serialize};

use crate::flow::FactorMask;

/// Whether a system trains on original features or reconstructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    RawBaseline,
    Reconstructed,
}

/// One row of the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationSystem {
    /// 1-based position in the grid.
    pub system_no: u8,
    pub kind: SystemKind,
    /// Factor mask used for reconstruction; `None` for the raw baseline.
    pub mask: Option<FactorMask>,
}

/// Dataset tag used for the raw-feature baseline.
pub const RAW_TAG: &str = "raw";

impl AblationSystem {
    /// Tag stamped on datasets and classifier artifacts of this system.
    pub fn mask_tag(&self) -> String {
        match self.mask {
            Some(m) => m.to_string(),
            None => RAW_TAG.to_string(),
        }
    }
}

/// Looks up the grid system whose tag matches, e.g. `"raw"` or `"-R-"`.
pub fn system_for_tag(tag: &str) -> Option<AblationSystem> {
    enumerate_systems().into_iter().find(|s| s.mask_tag() == tag)
}

/// The full grid, in fixed presentation order:
///
/// 1. raw features;
/// 2. all factors kept;
/// 3. all factors removed;
/// 4.–6. exactly one factor kept (content, rhythm, pitch);
/// 7.–9. exactly one factor removed (pitch, rhythm, content).
pub fn enumerate_systems() -> Vec<AblationSystem> {
    let mask = |c: bool, r: bool, p: bool| {
        Some(FactorMask {
            content: c,
            rhythm: r,
            pitch: p,
        })
    };
    let reconstructed = |no: u8, m: Option<FactorMask>| AblationSystem {
        system_no: no,
        kind: SystemKind::Reconstructed,
        mask: m,
    };
    let mut out = vec![AblationSystem {
        system_no: 1,
        kind: SystemKind::RawBaseline,
        mask: None,
    }];
    out.push(reconstructed(2, mask(true, true, true)));
    out.push(reconstructed(3, mask(false, false, false)));
    out.push(reconstructed(4, mask(true, false, false)));
    out.push(reconstructed(5, mask(false, true, false)));
    out.push(reconstructed(6, mask(false, false, true)));
    out.push(reconstructed(7, mask(true, true, false)));
    out.push(reconstructed(8, mask(true, false, true)));
    out.push(reconstructed(9, mask(false, true, true)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn grid_has_exactly_nine_systems_in_order() {
        let systems = enumerate_systems();
        assert_eq!(systems.len(), 9);
        for (i, s) in systems.iter().enumerate() {
            assert_eq!(s.system_no as usize, i + 1);
        }
    }

    #[test]
    fn system_three_removes_every_factor() {
        let systems = enumerate_systems();
        let s3 = &systems[2];
        assert_eq!(s3.kind, SystemKind::Reconstructed);
        let m = s3.mask.unwrap();
        assert!(!m.content && !m.rhythm && !m.pitch);
        assert_eq!(s3.mask_tag(), "---");
    }

    #[test]
    fn system_five_keeps_only_rhythm() {
        let systems = enumerate_systems();
        let s5 = &systems[4];
        let m = s5.mask.unwrap();
        assert!(!m.content && m.rhythm && !m.pitch);
        assert_eq!(s5.mask_tag(), "-R-");
    }

    #[test]
    fn only_the_first_system_is_raw() {
        let systems = enumerate_systems();
        assert_eq!(systems[0].kind, SystemKind::RawBaseline);
        assert!(systems[0].mask.is_none());
        assert_eq!(systems[0].mask_tag(), RAW_TAG);
        for s in &systems[1..] {
            assert_eq!(s.kind, SystemKind::Reconstructed);
            assert!(s.mask.is_some());
        }
    }

    #[test]
    fn tags_are_distinct_and_cover_all_masks() {
        let systems = enumerate_systems();
        let tags: BTreeSet<String> = systems.iter().map(AblationSystem::mask_tag).collect();
        assert_eq!(tags.len(), 9);
        // the 8 reconstructed systems enumerate every subset of {C, R, P}
        let masks: BTreeSet<String> = systems[1..]
            .iter()
            .map(|s| s.mask.unwrap().to_string())
            .collect();
        assert_eq!(masks.len(), 8);
        // singletons at positions 4-6, pairs at 7-9
        assert_eq!(systems[3].mask_tag(), "C--");
        assert_eq!(systems[5].mask_tag(), "--P");
        assert_eq!(systems[6].mask_tag(), "CR-");
        assert_eq!(systems[7].mask_tag(), "C-P");
        assert_eq!(systems[8].mask_tag(), "-RP");
    }

    #[test]
    fn tags_resolve_back_to_their_system() {
        for s in enumerate_systems() {
            let found = system_for_tag(&s.mask_tag()).unwrap();
            assert_eq!(found.system_no, s.system_no);
            assert_eq!(found.mask, s.mask);
        }
        assert!(system_for_tag("RR-").is_none());
        assert!(system_for_tag("").is_none());
    }

    #[test]
    fn mask_counts_match_grid_positions() {
        let systems = enumerate_systems();
        let kept: Vec<usize> = systems[1..]
            .iter()
            .map(|s| s.mask.unwrap().n_preserved())
            .collect();
        assert_eq!(kept, vec![3, 0, 1, 1, 1, 2, 2, 2]);
    }
}

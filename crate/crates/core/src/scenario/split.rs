//! Deterministic 80/20 train/validation assignment.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Scenario, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    #[default]
    PerScenario,
    PerRecording,
}

impl SplitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitMode::PerScenario => "scenario",
            SplitMode::PerRecording => "recording",
        }
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scenario" | "per-scenario" => Ok(SplitMode::PerScenario),
            "recording" | "per-recording" => Ok(SplitMode::PerRecording),
            _ => Err(Error::Argument(format!("unknown split mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    pub split_seed: u64,
    pub mode: SplitMode,
}

impl ScenarioSet {
    pub fn count(&self, split: Split) -> usize {
        self.scenarios.iter().filter(|s| s.split == split).count()
    }

    pub fn of_split(&self, split: Split) -> impl Iterator<Item = &Scenario> {
        self.scenarios.iter().filter(move |s| s.split == split)
    }

    pub fn get(&self, scenario_id: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.scenario_id == scenario_id)
    }
}

/// ⌈0.8·n⌉ in exact integer arithmetic.
pub fn train_count(n: usize) -> usize {
    (4 * n).div_ceil(5)
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Shuffles with a seeded ChaCha8 stream; the first ⌈0.8·n⌉ of the permutation are train.
/// Scenario order is preserved.
pub fn assign_split(mut scenarios: Vec<Scenario>, seed: u64) -> ScenarioSet {
    let n = scenarios.len();
    let cut = train_count(n);
    for (rank, idx) in permutation(n, seed).into_iter().enumerate() {
        scenarios[idx].split = if rank < cut { Split::Train } else { Split::Validation };
    }
    ScenarioSet {
        scenarios,
        split_seed: seed,
        mode: SplitMode::PerScenario,
    }
}

/// Whole recordings go to one side; recordings are taken in shuffled order until
/// the train side holds at least ⌈0.8·n⌉ scenarios.
pub fn assign_split_by_recording(mut scenarios: Vec<Scenario>, seed: u64) -> ScenarioSet {
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &scenarios {
        *sizes.entry(s.recording_id.as_str()).or_default() += 1;
    }
    let recordings: Vec<(String, usize)> = sizes.into_iter().map(|(r, c)| (r.to_string(), c)).collect();
    let cut = train_count(scenarios.len());
    let mut train = std::collections::BTreeSet::new();
    let mut taken = 0;
    for idx in permutation(recordings.len(), seed) {
        if taken >= cut {
            break;
        }
        taken += recordings[idx].1;
        train.insert(recordings[idx].0.clone());
    }
    for s in &mut scenarios {
        s.split = if train.contains(&s.recording_id) {
            Split::Train
        } else {
            Split::Validation
        };
    }
    ScenarioSet {
        scenarios,
        split_seed: seed,
        mode: SplitMode::PerRecording,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataSource;
    use crate::scenario::{LaneChangeDirection, LaneChangeGoal, Maneuver, RefSample, ReferenceTrajectory};

    pub(crate) fn dummy(i: usize, recording: &str) -> Scenario {
        Scenario {
            scenario_id: format!("s{i:04}"),
            dataset: DataSource::Canonical,
            recording_id: recording.into(),
            map_id: "m".into(),
            ego_track_id: i as i64,
            start_time: 0.0,
            deadline: 10.0,
            maneuver: Maneuver::LaneChange(LaneChangeGoal {
                start_lane_id: 1,
                target_lane_id: 2,
                direction: LaneChangeDirection::Left,
            }),
            reference: ReferenceTrajectory::new(vec![
                RefSample {
                    t: 0.0,
                    x: 0.0,
                    y: 0.0,
                    yaw: 0.0,
                    speed: 1.0,
                },
                RefSample {
                    t: 0.1,
                    x: 0.1,
                    y: 0.0,
                    yaw: 0.0,
                    speed: 1.0,
                },
            ])
            .unwrap(),
            split: Split::Train,
        }
    }

    #[test]
    fn ceiling_counts() {
        assert_eq!(train_count(10), 8);
        assert_eq!(train_count(2217), 1774);
        assert_eq!(train_count(1), 1);
        assert_eq!(train_count(0), 0);
        assert_eq!(train_count(3), 3);
    }

    #[test]
    fn ten_scenarios_split_eight_two() {
        let set = assign_split((0..10).map(|i| dummy(i, "r")).collect(), 42);
        assert_eq!(set.count(Split::Train), 8);
        assert_eq!(set.count(Split::Validation), 2);
        let again = assign_split((0..10).map(|i| dummy(i, "r")).collect(), 42);
        assert_eq!(set, again);
    }

    #[test]
    fn per_recording_keeps_recordings_together() {
        let scenarios: Vec<_> = (0..50).map(|i| dummy(i, &format!("rec{}", i % 7))).collect();
        let set = assign_split_by_recording(scenarios, 3);
        for rec in 0..7 {
            let name = format!("rec{rec}");
            let splits: std::collections::BTreeSet<_> = set
                .scenarios
                .iter()
                .filter(|s| s.recording_id == name)
                .map(|s| s.split)
                .collect();
            assert_eq!(splits.len(), 1);
        }
        assert!(set.count(Split::Train) >= 40);
    }
}

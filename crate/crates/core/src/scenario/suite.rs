//! `.crts` scenario suite files.
//!
//! ```text
//! CRTS 1
//! seed <split_seed> <scenario|recording>
//! map <map_id> <path>
//! dataset <recording_id> <path>
//! scenario <id> <split> <source> <recording_id> <map_id> <ego_id> <start> <deadline> lane_change <start_lane> <target_lane> <left|right>
//! scenario <id> <split> <source> <recording_id> <map_id> <ego_id> <start> <deadline> roundabout <entry_gate> <exit_gate> <last_prior_exit_arc>
//! ref <t> <x> <y> <yaw> <speed>
//! ```
//!
//! `ref` lines belong to the preceding `scenario`. Relative paths are resolved
//! against the directory holding the suite file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{
    LaneChangeGoal, Maneuver, RefSample, ReferenceTrajectory, RoundaboutGoal, Scenario, ScenarioSet, SplitMode,
};
use crate::error::{Error, Result};

pub const SUITE_VERSION: &str = "CRTS 1";

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteFile {
    pub set: ScenarioSet,
    /// (map id, path) pairs.
    pub maps: Vec<(String, PathBuf)>,
    /// (recording id, canonical dataset path) pairs.
    pub datasets: Vec<(String, PathBuf)>,
}

fn path_token(p: &Path) -> Result<String> {
    let s = p.to_string_lossy().into_owned();
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(Error::Argument(format!("path `{s}` must not contain whitespace")));
    }
    Ok(s)
}

pub fn suite_to_string(suite: &SuiteFile) -> Result<String> {
    let mut out = String::new();
    out.push_str(SUITE_VERSION);
    out.push('\n');
    let _ = writeln!(out, "seed {} {}", suite.set.split_seed, suite.set.mode.as_str());
    for (id, p) in &suite.maps {
        let _ = writeln!(out, "map {id} {}", path_token(p)?);
    }
    for (id, p) in &suite.datasets {
        let _ = writeln!(out, "dataset {id} {}", path_token(p)?);
    }
    for s in &suite.set.scenarios {
        let _ = write!(
            out,
            "scenario {} {} {} {} {} {} {} {} ",
            s.scenario_id, s.split, s.dataset, s.recording_id, s.map_id, s.ego_track_id, s.start_time, s.deadline
        );
        match &s.maneuver {
            Maneuver::LaneChange(g) => {
                let _ = writeln!(
                    out,
                    "lane_change {} {} {}",
                    g.start_lane_id,
                    g.target_lane_id,
                    g.direction.as_str()
                );
            }
            Maneuver::Roundabout(g) => {
                let _ = writeln!(
                    out,
                    "roundabout {} {} {}",
                    g.entry_gate_id, g.target_exit_gate_id, g.last_prior_exit_arc
                );
            }
        }
        for r in s.reference.samples() {
            let _ = writeln!(out, "ref {} {} {} {} {}", r.t, r.x, r.y, r.yaw, r.speed);
        }
    }
    Ok(out)
}

/// Paths are written exactly as stored in `suite`.
pub fn write_suite(suite: &SuiteFile, path: &Path) -> Result<()> {
    std::fs::write(path, suite_to_string(suite)?).map_err(|e| Error::io(path, e))
}

/// Reads a suite and resolves relative map and dataset paths against its directory.
pub fn read_suite(path: &Path) -> Result<SuiteFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut suite = parse_suite(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    for (_, p) in suite.maps.iter_mut().chain(suite.datasets.iter_mut()) {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(suite)
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{tok}`")))
}

struct Pending {
    scenario: Scenario,
    samples: Vec<RefSample>,
    line: usize,
}

fn finish(p: Pending, out: &mut Vec<Scenario>) -> Result<()> {
    let mut scenario = p.scenario;
    scenario.reference = ReferenceTrajectory::new(p.samples).map_err(|e| Error::parse(p.line, e.to_string()))?;
    if !(scenario.deadline > scenario.start_time) {
        return Err(Error::parse(p.line, "deadline must be after start time"));
    }
    out.push(scenario);
    Ok(())
}

pub fn parse_suite(text: &str) -> Result<SuiteFile> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let version = lines.next().map(|(_, l)| l).unwrap_or("");
    if version != SUITE_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version.to_string(),
            expected: SUITE_VERSION.to_string(),
        });
    }
    let mut seed = 0;
    let mut mode = SplitMode::PerScenario;
    let mut maps = Vec::new();
    let mut datasets = Vec::new();
    let mut scenarios = Vec::new();
    let mut pending: Option<Pending> = None;
    // Placeholder reference until the `ref` lines are collected.
    let placeholder = ReferenceTrajectory::new(vec![
        RefSample {
            t: 0.0,
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
            speed: 0.0,
        },
        RefSample {
            t: 0.1,
            x: 1.0,
            y: 0.0,
            yaw: 0.0,
            speed: 0.0,
        },
    ])?;

    for (line, content) in lines {
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("seed") => {
                seed = field(toks.next(), line, "seed")?;
                if let Some(m) = toks.next() {
                    mode = m.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
                }
            }
            Some("map") => {
                let id: String = field(toks.next(), line, "map id")?;
                maps.push((id, PathBuf::from(field::<String>(toks.next(), line, "map path")?)));
            }
            Some("dataset") => {
                let id: String = field(toks.next(), line, "recording id")?;
                datasets.push((id, PathBuf::from(field::<String>(toks.next(), line, "dataset path")?)));
            }
            Some("scenario") => {
                if let Some(p) = pending.take() {
                    finish(p, &mut scenarios)?;
                }
                let scenario_id = field(toks.next(), line, "scenario id")?;
                let split = field(toks.next(), line, "split")?;
                let dataset = field(toks.next(), line, "source")?;
                let recording_id = field(toks.next(), line, "recording id")?;
                let map_id = field(toks.next(), line, "map id")?;
                let ego_track_id = field(toks.next(), line, "ego id")?;
                let start_time = field(toks.next(), line, "start time")?;
                let deadline = field(toks.next(), line, "deadline")?;
                let maneuver = match toks.next() {
                    Some("lane_change") => Maneuver::LaneChange(LaneChangeGoal {
                        start_lane_id: field(toks.next(), line, "start lane")?,
                        target_lane_id: field(toks.next(), line, "target lane")?,
                        direction: field(toks.next(), line, "direction")?,
                    }),
                    Some("roundabout") => Maneuver::Roundabout(RoundaboutGoal {
                        entry_gate_id: field(toks.next(), line, "entry gate")?,
                        target_exit_gate_id: field(toks.next(), line, "exit gate")?,
                        last_prior_exit_arc: field(toks.next(), line, "last prior exit arc")?,
                    }),
                    other => {
                        return Err(Error::parse(
                            line,
                            format!("unknown maneuver `{}`", other.unwrap_or("")),
                        ));
                    }
                };
                pending = Some(Pending {
                    scenario: Scenario {
                        scenario_id,
                        dataset,
                        recording_id,
                        map_id,
                        ego_track_id,
                        start_time,
                        deadline,
                        maneuver,
                        reference: placeholder.clone(),
                        split,
                    },
                    samples: Vec::new(),
                    line,
                });
            }
            Some("ref") => {
                let p = pending
                    .as_mut()
                    .ok_or_else(|| Error::parse(line, "ref before scenario record"))?;
                p.samples.push(RefSample {
                    t: field(toks.next(), line, "t")?,
                    x: field(toks.next(), line, "x")?,
                    y: field(toks.next(), line, "y")?,
                    yaw: field(toks.next(), line, "yaw")?,
                    speed: field(toks.next(), line, "speed")?,
                });
            }
            Some(other) => return Err(Error::parse(line, format!("unknown record `{other}`"))),
            None => {}
        }
    }
    if let Some(p) = pending.take() {
        finish(p, &mut scenarios)?;
    }
    Ok(SuiteFile {
        set: ScenarioSet {
            scenarios,
            split_seed: seed,
            mode,
        },
        maps,
        datasets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataSource;
    use crate::scenario::{assign_split, LaneChangeDirection, Split};

    fn suite() -> SuiteFile {
        let reference = ReferenceTrajectory::new(vec![
            RefSample {
                t: 7.0,
                x: 0.0,
                y: 0.0,
                yaw: 0.0,
                speed: 13.7,
            },
            RefSample {
                t: 7.1,
                x: 1.37,
                y: 0.01,
                yaw: 0.007299,
                speed: 13.7,
            },
        ])
        .unwrap();
        let lc = Scenario {
            scenario_id: "aaaa".into(),
            dataset: DataSource::Ngsim,
            recording_id: "r1".into(),
            map_id: "hw".into(),
            ego_track_id: 4,
            start_time: 7.0,
            deadline: 17.0,
            maneuver: Maneuver::LaneChange(LaneChangeGoal {
                start_lane_id: 3,
                target_lane_id: 2,
                direction: LaneChangeDirection::Left,
            }),
            reference: reference.clone(),
            split: Split::Train,
        };
        let ra = Scenario {
            scenario_id: "bbbb".into(),
            maneuver: Maneuver::Roundabout(RoundaboutGoal {
                entry_gate_id: 1,
                target_exit_gate_id: 12,
                last_prior_exit_arc: 31.25,
            }),
            deadline: 29.3,
            ..lc.clone()
        };
        SuiteFile {
            set: assign_split(vec![lc, ra], 7),
            maps: vec![("hw".into(), PathBuf::from("maps/hw.crtm"))],
            datasets: vec![("r1".into(), PathBuf::from("data/r1.crtd"))],
        }
    }

    #[test]
    fn roundtrip_is_lossless() {
        let s = suite();
        let text = suite_to_string(&s).unwrap();
        assert_eq!(parse_suite(&text).unwrap(), s);
    }

    #[test]
    fn read_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.crts");
        write_suite(&suite(), &path).unwrap();
        let back = read_suite(&path).unwrap();
        assert_eq!(back.maps[0].1, dir.path().join("maps/hw.crtm"));
    }

    #[test]
    fn rejects_bad_version_and_orphan_ref() {
        assert!(matches!(parse_suite("CRTS 0\n"), Err(Error::UnsupportedVersion { .. })));
        assert!(matches!(
            parse_suite("CRTS 1\nref 0 0 0 0 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}

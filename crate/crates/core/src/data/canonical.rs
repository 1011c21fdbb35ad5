//! Canonical `.crtd` dataset files.
//!
//! ```text
//! CRTD 1
//! dataset <source> <recording_id> <map_id>
//! vehicle <id> <class> <length_m> <width_m>
//! sample <id> <t_s> <x_m> <y_m> <yaw_rad> <speed_mps> <lane_id|->
//! ```
//!
//! Line 1 is the format version. Every `sample` line belongs to the most recent
//! `vehicle` line with the same id. Floats use the shortest representation that
//! round-trips exactly, so writing is byte-deterministic. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::{DataSource, TrackSample, TrajectoryDataset, VehicleClass, VehicleTrack};
use crate::error::{Error, Result};

pub const CANONICAL_VERSION: &str = "CRTD 1";

fn check_token(what: &str, value: &str) -> Result<()> {
    if value.is_empty() || value.chars().any(char::is_whitespace) {
        return Err(Error::Argument(format!(
            "{what} `{value}` must be a non-empty token without whitespace"
        )));
    }
    Ok(())
}

pub fn to_canonical_string(dataset: &TrajectoryDataset) -> Result<String> {
    check_token("recording id", &dataset.recording_id)?;
    check_token("map id", &dataset.map_id)?;
    let mut out = String::with_capacity(64 + dataset.sample_count() * 64);
    out.push_str(CANONICAL_VERSION);
    out.push('\n');
    let _ = writeln!(
        out,
        "dataset {} {} {}",
        dataset.source, dataset.recording_id, dataset.map_id
    );
    for track in dataset.tracks.values() {
        let _ = writeln!(
            out,
            "vehicle {} {} {} {}",
            track.id, track.class, track.length, track.width
        );
        for s in &track.samples {
            let _ = write!(
                out,
                "sample {} {} {} {} {} {} ",
                track.id, s.t, s.x, s.y, s.yaw, s.speed
            );
            match s.lane_id {
                Some(l) => {
                    let _ = writeln!(out, "{l}");
                }
                None => out.push_str("-\n"),
            }
        }
    }
    Ok(out)
}

pub fn write_canonical(dataset: &TrajectoryDataset, path: &Path) -> Result<()> {
    let text = to_canonical_string(dataset)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_canonical(path: &Path) -> Result<TrajectoryDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_canonical(&text)
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{tok}`")))
}

pub fn parse_canonical(text: &str) -> Result<TrajectoryDataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let version = lines.next().map(|(_, l)| l).unwrap_or("");
    if version != CANONICAL_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version.to_string(),
            expected: CANONICAL_VERSION.to_string(),
        });
    }
    let mut dataset: Option<TrajectoryDataset> = None;
    let mut current: Option<VehicleTrack> = None;

    for (line, content) in lines {
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("dataset") => {
                if dataset.is_some() {
                    return Err(Error::parse(line, "duplicate dataset header"));
                }
                let source: DataSource = num::<String>(toks.next(), line, "source")?.parse()?;
                let recording: String = num(toks.next(), line, "recording id")?;
                let map: String = num(toks.next(), line, "map id")?;
                dataset = Some(TrajectoryDataset::new(source, recording, map));
            }
            Some("vehicle") => {
                let ds = dataset
                    .as_mut()
                    .ok_or_else(|| Error::parse(line, "vehicle before dataset header"))?;
                if let Some(done) = current.take() {
                    done.check()?;
                    ds.insert(done);
                }
                let id: i64 = num(toks.next(), line, "vehicle id")?;
                if ds.tracks.contains_key(&id) {
                    return Err(Error::parse(line, format!("duplicate vehicle id {id}")));
                }
                let class: VehicleClass = num::<String>(toks.next(), line, "class")?.parse()?;
                current = Some(VehicleTrack {
                    id,
                    class,
                    length: num(toks.next(), line, "length")?,
                    width: num(toks.next(), line, "width")?,
                    samples: Vec::new(),
                });
            }
            Some("sample") => {
                let track = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(line, "sample before vehicle record"))?;
                let id: i64 = num(toks.next(), line, "vehicle id")?;
                if id != track.id {
                    return Err(Error::parse(
                        line,
                        format!("sample for vehicle {id} inside vehicle {}", track.id),
                    ));
                }
                let t = num(toks.next(), line, "t")?;
                let x = num(toks.next(), line, "x")?;
                let y = num(toks.next(), line, "y")?;
                let yaw = num(toks.next(), line, "yaw")?;
                let speed = num(toks.next(), line, "speed")?;
                let lane_id = match toks.next() {
                    Some("-") => None,
                    other => Some(num(other, line, "lane id")?),
                };
                track.samples.push(TrackSample {
                    t,
                    x,
                    y,
                    yaw,
                    speed,
                    lane_id,
                });
            }
            Some(other) => return Err(Error::parse(line, format!("unknown record `{other}`"))),
            None => {}
        }
    }
    let mut ds = dataset.ok_or_else(|| Error::parse(1, "missing dataset header"))?;
    if let Some(done) = current.take() {
        done.check()?;
        ds.insert(done);
    }
    for track in ds.tracks.values() {
        if !track.is_on_grid() {
            return Err(Error::Data {
                vehicle: track.id,
                message: "samples are not on the 0.1 s grid".into(),
            });
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tick_time;

    fn sample_dataset() -> TrajectoryDataset {
        let mut ds = TrajectoryDataset::new(DataSource::Ngsim, "rec-1", "highway");
        for id in [2, 9] {
            ds.insert(VehicleTrack {
                id,
                class: VehicleClass::Truck,
                length: 12.25,
                width: 2.5,
                samples: (0..5)
                    .map(|k| TrackSample {
                        t: tick_time(k + id),
                        x: 0.1 * k as f64 + 1.0 / 3.0,
                        y: -2.0,
                        yaw: 0.123456789,
                        speed: 1.0,
                        lane_id: if k < 3 { Some(2) } else { None },
                    })
                    .collect(),
            });
        }
        ds
    }

    #[test]
    fn roundtrip_is_lossless() {
        let ds = sample_dataset();
        let text = to_canonical_string(&ds).unwrap();
        assert!(text.starts_with("CRTD 1\n"));
        let back = parse_canonical(&text).unwrap();
        assert_eq!(back, ds);
        assert_eq!(to_canonical_string(&back).unwrap(), text);
    }

    #[test]
    fn rejects_unknown_version() {
        assert!(matches!(
            parse_canonical("CRTD 2\n"),
            Err(Error::UnsupportedVersion { .. })
        ));
    }

    #[test]
    fn rejects_off_grid_samples() {
        let text = "CRTD 1\ndataset canonical r m\nvehicle 1 car 4 2\nsample 1 0 0 0 0 0 -\nsample 1 0.15 1 0 0 0 -\n";
        assert!(matches!(parse_canonical(text), Err(Error::Data { vehicle: 1, .. })));
    }

    #[test]
    fn hand_written_fixture_parses() {
        let text = "CRTD 1\n# fixture\ndataset canonical demo strip\n\nvehicle 5 car 4 2\nsample 5 1 0 0 0 10 1\nsample 5 1.1 1 0 0 10 1\n";
        let ds = parse_canonical(text).unwrap();
        assert_eq!(ds.tracks[&5].samples.len(), 2);
        assert_eq!(ds.map_id, "strip");
    }
}

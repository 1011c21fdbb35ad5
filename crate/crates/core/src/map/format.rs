//! `.crtm` map files.
//!
//! ```text
//! CRTM 1
//! map <map_id>
//! lane <lane_id> <width_m> <x,y> <x,y> ...
//! gate <gate_id> <entry|exit> <ax,ay> <bx,by> <dx,dy>
//! ```
//!
//! Lane centerlines are listed in travel direction. A gate is crossed when a
//! motion intersects the segment `a`–`b` while moving along `d` (normalized on
//! load). `#` starts a comment line.

use std::fmt::Write as _;
use std::path::Path;

use super::{GateKind, GateSegment, LaneGeometry, RoadMap};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const MAP_VERSION: &str = "CRTM 1";

fn point(tok: Option<&str>, line: usize) -> Result<Vec2> {
    let tok = tok.ok_or_else(|| Error::parse(line, "missing point"))?;
    let (x, y) = tok
        .split_once(',')
        .ok_or_else(|| Error::parse(line, format!("point `{tok}` is not `x,y`")))?;
    let parse = |v: &str| {
        v.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::parse(line, format!("invalid coordinate in `{tok}`")))
    };
    Ok(Vec2::new(parse(x)?, parse(y)?))
}

pub fn parse_map(text: &str) -> Result<RoadMap> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let version = lines.next().map(|(_, l)| l).unwrap_or("");
    if version != MAP_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version.to_string(),
            expected: MAP_VERSION.to_string(),
        });
    }
    let mut map_id = None;
    let mut lanes = Vec::new();
    let mut gates = Vec::new();
    let at_line = |line: usize| move |e: Error| Error::parse(line, e.to_string());

    for (line, content) in lines {
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("map") => {
                map_id = Some(
                    toks.next()
                        .ok_or_else(|| Error::parse(line, "missing map id"))?
                        .to_string(),
                );
            }
            Some("lane") => {
                let id: i64 = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::parse(line, "invalid lane id"))?;
                let width: f64 = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::parse(line, "invalid lane width"))?;
                let pts = toks.map(|t| point(Some(t), line)).collect::<Result<Vec<_>>>()?;
                lanes.push(LaneGeometry::new(id, pts, width).map_err(at_line(line))?);
            }
            Some("gate") => {
                let id: i64 = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::parse(line, "invalid gate id"))?;
                let kind: GateKind = toks
                    .next()
                    .ok_or_else(|| Error::parse(line, "missing gate kind"))?
                    .parse()
                    .map_err(at_line(line))?;
                let a = point(toks.next(), line)?;
                let b = point(toks.next(), line)?;
                let d = point(toks.next(), line)?;
                gates.push(GateSegment::new(id, kind, a, b, d).map_err(at_line(line))?);
            }
            Some(other) => return Err(Error::parse(line, format!("unknown record `{other}`"))),
            None => {}
        }
    }
    let map_id = map_id.ok_or_else(|| Error::parse(1, "missing `map` record"))?;
    RoadMap::new(map_id, lanes, gates)
}

pub fn map_to_string(map: &RoadMap) -> String {
    let mut out = String::new();
    out.push_str(MAP_VERSION);
    out.push('\n');
    let _ = writeln!(out, "map {}", map.map_id);
    for lane in &map.lanes {
        let _ = write!(out, "lane {} {}", lane.lane_id, lane.width);
        for p in lane.centerline.points() {
            let _ = write!(out, " {},{}", p.x, p.y);
        }
        out.push('\n');
    }
    for g in &map.gates {
        let [a, b] = g.endpoints;
        let d = g.crossing_direction;
        let _ = writeln!(
            out,
            "gate {} {} {},{} {},{} {},{}",
            g.gate_id, g.kind, a.x, a.y, b.x, b.y, d.x, d.y
        );
    }
    out
}

pub fn read_map(path: &Path) -> Result<RoadMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_map(&text)
}

pub fn write_map(map: &RoadMap, path: &Path) -> Result<()> {
    std::fs::write(path, map_to_string(map)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "CRTM 1
# two-lane strip with one exit gate
map strip
lane 1 3.5 0,0 100,0
lane 2 3.5 0,3.5 100,3.5
gate 7 exit 50,-2 50,2 2,0
";

    #[test]
    fn parses_and_roundtrips() {
        let map = parse_map(SAMPLE).unwrap();
        assert_eq!(map.map_id, "strip");
        assert_eq!(map.lanes.len(), 2);
        assert_eq!(map.gate(7).unwrap().crossing_direction, Vec2::new(1.0, 0.0));
        let again = parse_map(&map_to_string(&map)).unwrap();
        assert_eq!(again, map);
    }

    #[test]
    fn rejects_unknown_version() {
        let err = parse_map("CRTM 9\nmap x\n").unwrap_err();
        assert!(matches!(err, Error::UnsupportedVersion { .. }));
    }

    #[test]
    fn reports_line_of_bad_lane() {
        let err = parse_map("CRTM 1\nmap x\nlane 1 3.5 0,0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}

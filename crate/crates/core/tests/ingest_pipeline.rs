use std::fmt::Write as _;

use crts_core::data::{ingest, parse_canonical, read_canonical, write_canonical, ColumnMapping, IngestOptions};
use crts_core::geometry::Vec2;
use crts_core::map::{LaneGeometry, RoadMap};
use crts_core::scenario::{extract_lane_changes, LaneChangeDirection, Maneuver};

const FT: f64 = 0.3048;

/// One vehicle at 40 ft/s that moves from lane 1 to lane 2 between frames 60 and 100.
fn ngsim_csv() -> String {
    let mut out = String::from("Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Length,v_Width,v_Vel,Lane_ID,v_Class\n");
    for f in 0..=150 {
        let tau = ((f as f64 - 60.0) / 40.0).clamp(0.0, 1.0);
        let lx = 6.0 + 12.0 * (1.0 - (std::f64::consts::PI * tau).cos()) / 2.0;
        let ly = 100.0 + 4.0 * f as f64;
        let lane = if f < 80 { 1 } else { 2 };
        writeln!(out, "7,{f},{lx},{ly},15,6,40,{lane},2").unwrap();
    }
    out
}

fn lanes_map() -> RoadMap {
    let lane = |id: i64, lx: f64| {
        let y = -lx * FT;
        LaneGeometry::new(id, vec![Vec2::new(0.0, y), Vec2::new(500.0, y)], 12.0 * FT).unwrap()
    };
    RoadMap::new("i80-test", vec![lane(1, 6.0), lane(2, 18.0)], vec![]).unwrap()
}

#[test]
fn ngsim_rows_become_a_canonical_lane_change() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trajectories.csv");
    std::fs::write(&csv, ngsim_csv()).unwrap();

    let ds = ingest(&csv, &ColumnMapping::ngsim(), &IngestOptions::new("i80-test")).unwrap();
    let track = ds.track(7).unwrap();
    assert_eq!(track.samples.len(), 151);
    assert!(track.is_on_grid());
    assert!((track.length - 15.0 * FT).abs() < 1e-12);
    assert!((track.width - 6.0 * FT).abs() < 1e-12);

    // Away from the ends and before the lateral move the path is linear, so
    // smoothing leaves it unchanged; the front bumper is moved to the center.
    let s = &track.samples[20];
    assert!((s.t - 2.0).abs() < 1e-12);
    assert!((s.x - ((100.0 + 80.0) * FT - 7.5 * FT)).abs() < 1e-9, "x = {}", s.x);
    assert!((s.y - (-6.0 * FT)).abs() < 1e-9, "y = {}", s.y);
    assert!(s.yaw.abs() < 1e-9);
    assert!((s.speed - 40.0 * FT).abs() < 1e-9);
    assert_eq!(s.lane_id, Some(1));

    let out = dir.path().join("i80.crtd");
    write_canonical(&ds, &out).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(parse_canonical(&text).unwrap(), ds);
    assert_eq!(read_canonical(&out).unwrap(), ds);
    let again = dir.path().join("again.crtd");
    write_canonical(&read_canonical(&out).unwrap(), &again).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());

    let ex = extract_lane_changes(&ds, &lanes_map());
    assert_eq!(ex.scenarios.len(), 1);
    let sc = &ex.scenarios[0];
    assert!((sc.start_time - 3.0).abs() < 1e-9);
    assert!((sc.deadline - 13.0).abs() < 1e-9);
    match sc.maneuver {
        Maneuver::LaneChange(g) => {
            assert_eq!((g.start_lane_id, g.target_lane_id), (1, 2));
            assert_eq!(g.direction, LaneChangeDirection::Right);
        }
        _ => panic!("expected a lane change"),
    }
    assert!((sc.reference.first().t - 3.0).abs() < 1e-9);
}

#[test]
fn missing_column_is_reported_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "Vehicle_ID,Frame_ID,Local_X\n1,0,0\n").unwrap();
    let err = ingest(&csv, &ColumnMapping::ngsim(), &IngestOptions::new("m")).unwrap_err();
    assert!(err.to_string().contains("Local_Y"), "{err}");
}

mod common;

use std::net::{SocketAddr, TcpListener};
use std::sync::Arc;
use std::thread;

use serde_json::{json, Value};

use crts_core::env::server::decode_observation;
use crts_core::env::{policy_replay_follower, serve, Client, Episode, EpisodeConfig, SplitSelection, SuiteContext};
use crts_core::sim::Action;

fn start(ctx: Arc<SuiteContext>) -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let defaults = EpisodeConfig {
        split: SplitSelection(None),
        ..Default::default()
    };
    thread::spawn(move || serve(listener, ctx, defaults));
    addr
}

fn server() -> (Arc<SuiteContext>, SocketAddr) {
    let ctx = Arc::new(common::small_suite());
    let addr = start(Arc::clone(&ctx));
    (ctx, addr)
}

/// Drives `scenario_id` with the replay follower both in process and over the
/// wire and checks every observation, reward, done flag and info record.
fn compare_streams(ctx: &SuiteContext, addr: SocketAddr, scenario_id: &str) -> usize {
    let cfg = EpisodeConfig {
        split: SplitSelection(None),
        ..Default::default()
    };
    let mut local = Episode::new(ctx, cfg).unwrap();
    let mut client = Client::connect(addr).unwrap();
    let (obs, info) = local.reset(Some(scenario_id)).unwrap();
    let reply = client.reset(Some(scenario_id)).unwrap();
    assert_eq!(reply["type"], "reset", "{reply}");
    assert_eq!(decode_observation(&reply["observation"]).unwrap(), obs.unwrap());
    assert_eq!(reply["info"], serde_json::to_value(&info).unwrap());

    let scenario = local.current_scenario().unwrap();
    let mut steps = 0;
    while !local.is_done() {
        let action = policy_replay_follower(scenario, local.current_world().unwrap(), &ctx.physics);
        let want = local.step(action).unwrap();
        let got = client.step(action).unwrap();
        assert_eq!(got["type"], "step", "{got}");
        assert_eq!(got["reward"].as_f64().unwrap().to_bits(), want.reward.to_bits());
        assert_eq!(got["done"].as_bool().unwrap(), want.done);
        assert_eq!(
            decode_observation(&got["observation"]).unwrap(),
            want.observation.unwrap()
        );
        assert_eq!(got["info"], serde_json::to_value(&want.info).unwrap());
        steps += 1;
    }
    assert_eq!(client.close().unwrap()["type"], "bye");
    steps
}

#[test]
fn hello_reports_suite_metadata() {
    let (ctx, addr) = server();
    let mut c = Client::connect(addr).unwrap();
    let hello = c.hello().unwrap();
    assert_eq!(hello["type"], "hello");
    assert_eq!(hello["observation_shape"], json!([186, 150, 5]));
    assert_eq!(
        hello["counts"]["train"].as_u64().unwrap() as usize,
        ctx.set.count(crts_core::scenario::Split::Train)
    );
    assert_eq!(
        hello["counts"]["validation"].as_u64().unwrap() as usize,
        ctx.set.count(crts_core::scenario::Split::Validation)
    );
    let bad = c.request(&json!({"type": "hello", "version": 99})).unwrap();
    assert_eq!(bad["code"], "version_mismatch");
}

#[test]
fn wire_stream_matches_in_process_stream() {
    let (ctx, addr) = server();
    let lc = ctx
        .set
        .scenarios
        .iter()
        .find(|s| s.maneuver.kind() == "lane_change")
        .unwrap();
    let rb = ctx
        .set
        .scenarios
        .iter()
        .find(|s| s.maneuver.kind() == "roundabout")
        .unwrap();
    assert!(compare_streams(&ctx, addr, &lc.scenario_id) > 10);
    assert!(compare_streams(&ctx, addr, &rb.scenario_id) > 10);
}

#[test]
fn concurrent_clients_are_isolated() {
    let (ctx, addr) = server();
    let ids: Vec<String> = ctx
        .set
        .scenarios
        .iter()
        .take(4)
        .map(|s| s.scenario_id.clone())
        .collect();
    let handles: Vec<_> = ids
        .into_iter()
        .map(|id| {
            let ctx = Arc::clone(&ctx);
            thread::spawn(move || compare_streams(&ctx, addr, &id))
        })
        .collect();
    for h in handles {
        assert!(h.join().unwrap() > 0);
    }
}

#[test]
fn errors_are_typed_and_keep_the_connection() {
    let (ctx, addr) = server();
    let mut c = Client::connect(addr).unwrap();
    let code = |v: Value| v["code"].as_str().unwrap_or("").to_string();

    assert_eq!(code(c.send_raw(b"{not json").unwrap()), "bad_json");
    assert_eq!(code(c.send_raw(b"[1,2]").unwrap()), "bad_json");
    assert_eq!(code(c.request(&json!({"type": "launch"})).unwrap()), "unknown_type");
    assert_eq!(code(c.request(&json!({"kind": "reset"})).unwrap()), "unknown_type");
    assert_eq!(code(c.request(&json!({"type": "step"})).unwrap()), "bad_request");
    assert_eq!(code(c.step(Action::new(0.0, 0.0)).unwrap()), "not_reset");
    assert_eq!(code(c.reset(Some("missing")).unwrap()), "lookup");
    assert_eq!(
        code(c.request(&json!({"type": "config", "scheme": "lavish"})).unwrap()),
        "bad_request"
    );

    let lc = ctx
        .set
        .scenarios
        .iter()
        .find(|s| s.maneuver.kind() == "lane_change")
        .unwrap();
    assert_eq!(c.reset(Some(&lc.scenario_id)).unwrap()["type"], "reset");
    loop {
        let r = c.step(Action::new(0.0, 0.0)).unwrap();
        assert_eq!(r["type"], "step");
        if r["done"].as_bool().unwrap() {
            assert_eq!(r["info"]["termination"]["failure_reason"], "timeout");
            break;
        }
    }
    assert_eq!(code(c.step(Action::new(0.0, 0.0)).unwrap()), "episode_done");
    assert_eq!(c.hello().unwrap()["type"], "hello");
}

#[test]
fn config_changes_observation_and_split() {
    let (ctx, addr) = server();
    let mut c = Client::connect(addr).unwrap();
    let r = c
        .request(&json!({"type": "config", "stack": 4, "variant": "no_centerline", "split": "validation"}))
        .unwrap();
    assert_eq!(r["type"], "config", "{r}");
    assert_eq!(r["observation_shape"], json!([186, 150, 16]));
    let reset = c.reset(None).unwrap();
    assert_eq!(
        decode_observation(&reset["observation"]).unwrap().shape(),
        [186, 150, 16]
    );
    let first_val = ctx.set.of_split(crts_core::scenario::Split::Validation).next().unwrap();
    assert_eq!(reset["info"]["scenario_id"], first_val.scenario_id.as_str());

    let r = c
        .request(&json!({"type": "config", "stack": 4, "variant": "full"}))
        .unwrap();
    assert_eq!(r["observation_shape"], json!([186, 150, 20]));
    let train = ctx.set.of_split(crts_core::scenario::Split::Train).next().unwrap();
    assert_eq!(c.reset(Some(&train.scenario_id)).unwrap()["code"], "lookup");
}

#[test]
fn dropped_connection_does_not_affect_others() {
    let (ctx, addr) = server();
    {
        let mut c = Client::connect(addr).unwrap();
        c.reset(None).unwrap();
    }
    let id = ctx.set.scenarios[0].scenario_id.clone();
    assert!(compare_streams(&ctx, addr, &id) > 0);
}

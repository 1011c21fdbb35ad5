//! TCP transport for episodes.
//!
//! Every message is a 4-byte big-endian length followed by a UTF-8 JSON object
//! with a `type` field. Each connection owns one episode context. Observations
//! travel as `{"shape": [rows, cols, channels], "dtype": "uint8", "data": <base64>}`
//! with row-major channel-last bytes.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use log::{debug, info, warn};
use serde::Deserialize;
use serde_json::{json, Value};

use super::{Episode, EpisodeConfig, ScenarioOrder, SplitSelection, SuiteContext};
use crate::bev::{BevFrame, Variant};
use crate::error::{Error, Result};
use crate::reward::RewardScheme;
use crate::scenario::Split;
use crate::sim::Action;

pub const PROTOCOL_VERSION: u32 = 1;
/// Larger frames are treated as a transport failure.
pub const MAX_MESSAGE_BYTES: usize = 16 << 20;

/// Reads one frame. `Ok(None)` on a clean end of stream.
pub fn read_frame(stream: &mut impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match stream.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_MESSAGE_BYTES {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("message of {len} bytes exceeds the {MAX_MESSAGE_BYTES} byte limit"),
        ));
    }
    let mut buf = vec![0u8; len];
    stream.read_exact(&mut buf)?;
    Ok(Some(buf))
}

pub fn write_frame(stream: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len())
        .ok()
        .filter(|&n| n as usize <= MAX_MESSAGE_BYTES)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "message too large"))?;
    stream.write_all(&len.to_be_bytes())?;
    stream.write_all(payload)?;
    stream.flush()
}

pub fn encode_observation(frame: &BevFrame) -> Value {
    json!({
        "shape": frame.shape(),
        "dtype": "uint8",
        "data": BASE64.encode(&frame.data),
    })
}

pub fn decode_observation(value: &Value) -> Result<BevFrame> {
    let bad = |m: &str| Error::Protocol(format!("observation: {m}"));
    let shape: Vec<usize> = serde_json::from_value(value.get("shape").cloned().ok_or_else(|| bad("missing shape"))?)
        .map_err(|e| bad(&e.to_string()))?;
    let [rows, cols, channels] = shape[..] else {
        return Err(bad("shape must have three entries"));
    };
    let data = value
        .get("data")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("missing data"))?;
    let data = BASE64.decode(data).map_err(|e| bad(&e.to_string()))?;
    if data.len() != rows * cols * channels {
        return Err(bad("data length does not match shape"));
    }
    let mut frame = BevFrame::zeros(rows, cols, channels);
    frame.data = data;
    Ok(frame)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum Request {
    Hello {
        #[serde(default)]
        version: Option<u32>,
    },
    Config {
        #[serde(default)]
        scheme: Option<String>,
        #[serde(default)]
        split: Option<String>,
        #[serde(default)]
        variant: Option<String>,
        #[serde(default)]
        stack: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        order: Option<String>,
        #[serde(default)]
        render: Option<bool>,
    },
    Reset {
        #[serde(default)]
        scenario_id: Option<String>,
    },
    Step {
        action: Action,
    },
    Close,
}

const REQUEST_TYPES: [&str; 5] = ["hello", "config", "reset", "step", "close"];

fn error_reply(code: &str, message: impl std::fmt::Display) -> Value {
    json!({"type": "error", "code": code, "message": message.to_string()})
}

fn error_code(e: &Error) -> &'static str {
    match e {
        Error::Lookup(_) => "lookup",
        Error::EndOfSuite => "end_of_suite",
        Error::Argument(_) => "invalid_action",
        Error::Protocol(_) => "bad_request",
        _ => "internal",
    }
}

/// Per-connection state: the episode configuration and the running episode.
struct Session<'a> {
    ctx: &'a SuiteContext,
    config: EpisodeConfig,
    episode: Option<Episode<'a>>,
}

impl<'a> Session<'a> {
    fn new(ctx: &'a SuiteContext, config: EpisodeConfig) -> Self {
        Session {
            ctx,
            config,
            episode: None,
        }
    }

    fn describe_config(&self) -> Value {
        json!({
            "scheme": self.config.scheme.as_str(),
            "split": self.config.split.to_string(),
            "variant": self.config.observation.variant.as_str(),
            "stack": self.config.observation.stack_depth,
            "seed": self.config.seed,
            "order": match self.config.order {
                ScenarioOrder::Sequential => "sequential",
                ScenarioOrder::Shuffled => "shuffled",
            },
            "render": self.config.render,
            "observation_shape": self.config.observation.observation_shape(),
        })
    }

    /// Answers one raw message. The second value asks to close the connection.
    fn handle(&mut self, raw: &[u8]) -> (Value, bool) {
        let value: Value = match serde_json::from_slice(raw) {
            Ok(v @ Value::Object(_)) => v,
            Ok(_) => return (error_reply("bad_json", "message must be a JSON object"), false),
            Err(e) => return (error_reply("bad_json", e), false),
        };
        let kind = value.get("type").and_then(Value::as_str).unwrap_or_default();
        if !REQUEST_TYPES.contains(&kind) {
            return (
                error_reply("unknown_type", format!("unknown message type `{kind}`")),
                false,
            );
        }
        let request: Request = match serde_json::from_value(value) {
            Ok(r) => r,
            Err(e) => return (error_reply("bad_request", e), false),
        };
        match request {
            Request::Hello { version } => (self.hello(version), false),
            Request::Config {
                scheme,
                split,
                variant,
                stack,
                seed,
                order,
                render,
            } => {
                let reply = self
                    .configure(scheme, split, variant, stack, seed, order, render)
                    .unwrap_or_else(|e| error_reply("bad_request", e));
                (reply, false)
            }
            Request::Reset { scenario_id } => (self.reset(scenario_id.as_deref()), false),
            Request::Step { action } => (self.step(action), false),
            Request::Close => (json!({"type": "bye"}), true),
        }
    }

    fn hello(&self, version: Option<u32>) -> Value {
        if let Some(v) = version.filter(|&v| v != PROTOCOL_VERSION) {
            return error_reply(
                "version_mismatch",
                format!("client speaks version {v}, server speaks {PROTOCOL_VERSION}"),
            );
        }
        let set = &self.ctx.set;
        json!({
            "type": "hello",
            "version": PROTOCOL_VERSION,
            "server": concat!("crts ", env!("CARGO_PKG_VERSION")),
            "counts": {
                "train": set.count(Split::Train),
                "validation": set.count(Split::Validation),
            },
            "config": self.describe_config(),
            "observation_shape": self.config.observation.observation_shape(),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn configure(
        &mut self,
        scheme: Option<String>,
        split: Option<String>,
        variant: Option<String>,
        stack: Option<usize>,
        seed: Option<u64>,
        order: Option<String>,
        render: Option<bool>,
    ) -> Result<Value> {
        let mut config = self.config.clone();
        if let Some(s) = scheme {
            config.scheme = s.parse::<RewardScheme>()?;
        }
        if let Some(s) = split {
            config.split = s.parse::<SplitSelection>()?;
        }
        if let Some(v) = variant {
            config.observation.variant = v.parse::<Variant>()?;
        }
        if let Some(k) = stack {
            config.observation.stack_depth = k;
        }
        if let Some(s) = seed {
            config.seed = s;
        }
        if let Some(o) = order {
            config.order = o.parse()?;
        }
        if let Some(r) = render {
            config.render = r;
        }
        config.observation.check()?;
        self.config = config;
        self.episode = None;
        let mut reply = self.describe_config();
        reply["type"] = json!("config");
        Ok(reply)
    }

    fn reset(&mut self, scenario_id: Option<&str>) -> Value {
        if self.episode.is_none() {
            match Episode::new(self.ctx, self.config.clone()) {
                Ok(e) => self.episode = Some(e),
                Err(e) => return error_reply(error_code(&e), e),
            }
        }
        let episode = self.episode.as_mut().expect("episode created above");
        match episode.reset(scenario_id) {
            Ok((obs, info)) => json!({
                "type": "reset",
                "observation": obs.as_ref().map(encode_observation),
                "info": info,
            }),
            Err(e) => error_reply(error_code(&e), e),
        }
    }

    fn step(&mut self, action: Action) -> Value {
        let Some(episode) = self.episode.as_mut().filter(|e| e.current_world().is_some()) else {
            return error_reply("not_reset", "step before reset");
        };
        if episode.is_done() {
            return error_reply("episode_done", "episode is over; send reset");
        }
        match episode.step(action) {
            Ok(r) => json!({
                "type": "step",
                "observation": r.observation.as_ref().map(encode_observation),
                "reward": r.reward,
                "done": r.done,
                "info": r.info,
            }),
            Err(e) => error_reply(error_code(&e), e),
        }
    }
}

fn serve_connection(mut stream: TcpStream, ctx: &SuiteContext, defaults: EpisodeConfig) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut session = Session::new(ctx, defaults);
    while let Some(raw) = read_frame(&mut stream)? {
        let (reply, close) = session.handle(&raw);
        if reply["type"] == "error" {
            debug!("error reply: {reply}");
        }
        let bytes = serde_json::to_vec(&reply).map_err(io::Error::other)?;
        write_frame(&mut stream, &bytes)?;
        if close {
            break;
        }
    }
    Ok(())
}

/// Accepts connections forever, one thread per connection.
pub fn serve(listener: TcpListener, ctx: Arc<SuiteContext>, defaults: EpisodeConfig) -> Result<()> {
    defaults.observation.check()?;
    if let Ok(addr) = listener.local_addr() {
        info!("listening on {addr}");
    }
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                warn!("accept failed: {e}");
                continue;
            }
        };
        let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
        let ctx = Arc::clone(&ctx);
        let defaults = defaults.clone();
        thread::spawn(move || {
            info!("client {peer} connected");
            match serve_connection(stream, &ctx, defaults) {
                Ok(()) => info!("client {peer} disconnected"),
                Err(e) => warn!("client {peer} dropped: {e}"),
            }
        });
    }
    Ok(())
}

/// Blocking client for the wire protocol.
pub struct Client {
    stream: TcpStream,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Client { stream })
    }

    pub fn peer_addr(&self) -> io::Result<SocketAddr> {
        self.stream.peer_addr()
    }

    pub fn send_raw(&mut self, payload: &[u8]) -> io::Result<Value> {
        write_frame(&mut self.stream, payload)?;
        let reply = read_frame(&mut self.stream)?
            .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "server closed the connection"))?;
        serde_json::from_slice(&reply).map_err(io::Error::other)
    }

    pub fn request(&mut self, message: &Value) -> io::Result<Value> {
        let bytes = serde_json::to_vec(message).map_err(io::Error::other)?;
        self.send_raw(&bytes)
    }

    pub fn hello(&mut self) -> io::Result<Value> {
        self.request(&json!({"type": "hello", "version": PROTOCOL_VERSION}))
    }

    pub fn reset(&mut self, scenario_id: Option<&str>) -> io::Result<Value> {
        self.request(&json!({"type": "reset", "scenario_id": scenario_id}))
    }

    pub fn step(&mut self, action: Action) -> io::Result<Value> {
        self.request(&json!({"type": "step", "action": action}))
    }

    pub fn close(mut self) -> io::Result<Value> {
        self.request(&json!({"type": "close"}))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_round_trip() {
        let mut buf = Vec::new();
        write_frame(&mut buf, b"{\"type\":\"hello\"}").unwrap();
        assert_eq!(&buf[..4], &[0, 0, 0, 16]);
        let mut cursor = io::Cursor::new(buf);
        assert_eq!(read_frame(&mut cursor).unwrap().unwrap(), b"{\"type\":\"hello\"}");
        assert!(read_frame(&mut cursor).unwrap().is_none());
    }

    #[test]
    fn oversized_frame_is_rejected() {
        let mut cursor = io::Cursor::new(((MAX_MESSAGE_BYTES + 1) as u32).to_be_bytes().to_vec());
        assert!(read_frame(&mut cursor).is_err());
    }

    #[test]
    fn observation_encoding_round_trips() {
        let mut f = BevFrame::zeros(2, 3, 2);
        f.data[5] = 255;
        f.data[11] = 7;
        assert_eq!(decode_observation(&encode_observation(&f)).unwrap(), f);
    }
}

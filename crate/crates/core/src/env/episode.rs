//! The reset/step episode contract.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SuiteContext;
use crate::bev::{render, BevFrame, BevSpec, FrameStack};
use crate::data::{grid_tick, tick_time};
use crate::error::{Error, Result};
use crate::map::{lateral_offset, RoadMap};
use crate::reward::{init_reward_state, step_reward, RewardOutcome, RewardScheme, RewardState};
use crate::scenario::{Maneuver, RefSample, Scenario, Split};
use crate::sim::{
    check_collision, ego_step, evaluate_termination, Action, AgentReplayer, CommandTracker, EgoState, NavCommand,
    TerminationStatus, WorldState, DWELL_STEPS, SIM_DT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioOrder {
    #[default]
    Sequential,
    Shuffled,
}

impl FromStr for ScenarioOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(ScenarioOrder::Sequential),
            "shuffled" => Ok(ScenarioOrder::Shuffled),
            _ => Err(Error::Argument(format!("unknown scenario order `{s}`"))),
        }
    }
}

/// `None` selects every scenario in the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitSelection(pub Option<Split>);

impl fmt::Display for SplitSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(s) => write!(f, "{s}"),
            None => f.write_str("all"),
        }
    }
}

impl FromStr for SplitSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(SplitSelection(None));
        }
        Ok(SplitSelection(Some(s.parse()?)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub split: SplitSelection,
    pub scheme: RewardScheme,
    pub observation: BevSpec,
    pub seed: u64,
    pub order: ScenarioOrder,
    /// When false, no frames are rendered and observations are `None`.
    pub render: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            split: SplitSelection(Some(Split::Validation)),
            scheme: RewardScheme::Dense,
            observation: BevSpec::default(),
            seed: 0,
            order: ScenarioOrder::Sequential,
            render: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Info {
    pub scenario_id: String,
    pub step_index: i64,
    pub sim_time: f64,
    pub command: NavCommand,
    pub termination: TerminationStatus,
    pub ego: EgoPose,
    /// Lane change: signed offset from the target lane centerline.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_lane_offset: Option<f64>,
    /// Roundabout: distance from the reference drive.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub deviation: Option<f64>,
    /// Roundabout: arc position of the ego on the reference drive.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub progress: Option<f64>,
    pub episode_return: f64,
    /// Reference drive, included on reset only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference: Option<Vec<RefSample>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Option<BevFrame>,
    pub reward: f64,
    pub outcome: RewardOutcome,
    pub done: bool,
    pub info: Info,
}

struct Active<'a> {
    scenario: &'a Scenario,
    map: &'a RoadMap,
    replayer: AgentReplayer<'a>,
    start_tick: i64,
    history: VecDeque<WorldState>,
    reward: RewardState,
    commands: CommandTracker,
    frames: FrameStack,
    termination: TerminationStatus,
    episode_return: f64,
}

impl Active<'_> {
    fn world(&self) -> &WorldState {
        self.history.back().expect("episode has a state")
    }

    fn info(&self) -> Info {
        let w = self.world();
        let pos = w.ego.position();
        let (mut target_lane_offset, mut deviation, mut progress) = (None, None, None);
        match &self.scenario.maneuver {
            Maneuver::LaneChange(g) => {
                target_lane_offset = self.map.lane(g.target_lane_id).map(|l| lateral_offset(pos, l));
            }
            Maneuver::Roundabout(_) => {
                let p = self.scenario.reference.project(pos);
                deviation = Some(p.distance);
                progress = Some(p.s);
            }
        }
        Info {
            scenario_id: self.scenario.scenario_id.clone(),
            step_index: w.step_index,
            sim_time: w.sim_time,
            command: w.command,
            termination: self.termination,
            ego: EgoPose {
                x: w.ego.x,
                y: w.ego.y,
                yaw: w.ego.yaw,
                speed: w.ego.speed,
            },
            target_lane_offset,
            deviation,
            progress,
            episode_return: self.episode_return,
            reference: None,
        }
    }
}

/// One episode context: a cursor over the configured split plus the running episode.
pub struct Episode<'a> {
    ctx: &'a SuiteContext,
    config: EpisodeConfig,
    order: Vec<&'a Scenario>,
    cursor: usize,
    active: Option<Active<'a>>,
}

impl<'a> Episode<'a> {
    pub fn new(ctx: &'a SuiteContext, config: EpisodeConfig) -> Result<Self> {
        config.observation.check()?;
        let mut order = ctx.scenarios(config.split.0);
        if config.order == ScenarioOrder::Shuffled {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
        }
        Ok(Episode {
            ctx,
            config,
            order,
            cursor: 0,
            active: None,
        })
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn scenario_count(&self) -> usize {
        self.order.len()
    }

    pub fn current_world(&self) -> Option<&WorldState> {
        self.active.as_ref().map(|a| a.world())
    }

    pub fn current_scenario(&self) -> Option<&'a Scenario> {
        self.active.as_ref().map(|a| a.scenario)
    }

    pub fn is_done(&self) -> bool {
        self.active.as_ref().is_none_or(|a| a.termination.is_done())
    }

    fn observe(&self, active: &mut Active<'_>) -> Result<Option<BevFrame>> {
        if !self.config.render {
            return Ok(None);
        }
        let frame = render(active.world(), active.map, &self.config.observation);
        active.frames.stack(frame).map(Some)
    }

    /// Starts `scenario_id`, or the next scenario in order when `None`.
    pub fn reset(&mut self, scenario_id: Option<&str>) -> Result<(Option<BevFrame>, Info)> {
        let scenario = match scenario_id {
            Some(id) => *self
                .order
                .iter()
                .find(|s| s.scenario_id == id)
                .ok_or_else(|| Error::Lookup(format!("scenario `{id}` is not in split {}", self.config.split)))?,
            None => {
                let s = *self.order.get(self.cursor).ok_or(Error::EndOfSuite)?;
                self.cursor += 1;
                s
            }
        };
        let ctx = self.ctx;
        let map = ctx.map_for(scenario);
        let replayer = AgentReplayer::new(scenario, ctx.dataset_for(scenario), &ctx.catalog)?;
        let r0 = scenario.reference.first();
        let ego = EgoState::new(r0.x, r0.y, r0.yaw, r0.speed, &ctx.physics);
        let start_tick = grid_tick(scenario.start_time);
        let agents = replayer.poses_at(tick_time(start_tick));
        let mut commands = CommandTracker::default();
        let world = WorldState {
            step_index: 0,
            sim_time: tick_time(start_tick),
            collision: check_collision(&ego, &agents),
            command: commands.update(scenario, &ego, map),
            ego,
            agents,
        };
        let reward = init_reward_state(scenario, &world, map);
        let mut history = VecDeque::with_capacity(DWELL_STEPS + 1);
        history.push_back(world);
        let mut active = Active {
            scenario,
            map,
            replayer,
            start_tick,
            history,
            reward,
            commands,
            frames: FrameStack::new(self.config.observation.stack_depth),
            termination: TerminationStatus::RUNNING,
            episode_return: 0.0,
        };
        let obs = self.observe(&mut active)?;
        let mut info = active.info();
        info.reference = Some(scenario.reference.samples().to_vec());
        self.active = Some(active);
        Ok((obs, info))
    }

    /// One 0.1 s tick: ego, replay, collision, command, termination, reward, observation.
    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        let mut active = self
            .active
            .take()
            .ok_or_else(|| Error::Protocol("step before reset".into()))?;
        if active.termination.is_done() {
            self.active = Some(active);
            return Err(Error::Protocol("step after episode end".into()));
        }
        let ego = match ego_step(&active.world().ego, action, SIM_DT, &self.ctx.physics) {
            Ok(e) => e,
            Err(e) => {
                self.active = Some(active);
                return Err(e);
            }
        };
        let step_index = active.world().step_index + 1;
        let sim_time = tick_time(active.start_tick + step_index);
        let agents = active.replayer.poses_at(sim_time);
        let collision = check_collision(&ego, &agents);
        let command = active.commands.update(active.scenario, &ego, active.map);
        let world = WorldState {
            step_index,
            sim_time,
            ego,
            agents,
            collision,
            command,
        };
        if active.history.len() > DWELL_STEPS {
            active.history.pop_front();
        }
        active.history.push_back(world);
        let termination = evaluate_termination(active.scenario, active.history.make_contiguous(), active.map);
        let (outcome, next) = step_reward(
            &active.reward,
            self.config.scheme,
            active.scenario,
            active.map,
            active.world(),
            termination,
        );
        active.reward = next;
        active.termination = termination;
        active.episode_return += outcome.reward;
        let observation = self.observe(&mut active)?;
        let info = active.info();
        self.active = Some(active);
        Ok(StepResult {
            observation,
            reward: outcome.reward,
            outcome,
            done: termination.is_done(),
            info,
        })
    }

    pub fn reward_state(&self) -> Option<RewardState> {
        self.active.as_ref().map(|a| a.reward)
    }
}

//! Deterministic discrete-event simulation of the oracle network.
//!
//! One `Simulation` owns the virtual clock, the event queue, the simulated
//! ledger and every node. Tasks run sequentially: a request is posted, the
//! self-selected responders fetch and seal their readings, the temporary
//! consensus network forms as envelopes arrive, the group signature unlocks
//! the reveal, collection closes, the filter and the two consensus rounds
//! run, and the leader submits the aggregate back to the ledger.
//!
//! Collection closes under two regimes. With the filter enabled, the window
//! logic bounds what can contribute, so collection closes a fixed grace
//! period after the group signature. Without a filter nothing defends the
//! aggregate against stragglers, so collection stays open until the top-t
//! membership has been stable for the same grace period. Both regimes are
//! capped by the collection deadline.
//!
//! Ties in the schedule break by a monotone sequence number, so runs with
//! equal `(config, seed)` replay byte for byte.

mod behavior;
mod latency;
mod source;
mod trace;

pub use behavior::NodeBehavior;
pub use latency::{sample_latency, NodeLatency, LATENCY_FLOOR_S};
pub use source::{DataSourceProcess, WALK_GRID_US};
pub use trace::{TraceEvent, TraceLog, TraceRecord};

use crate::aggregation::{
    self, dedupe_sort_truncate, join_network, AggregationResult, JoinOutcome, TempNetwork,
};
use crate::collection::{self, FeedbackEnvelope, GroupSignatureStatus, SourceAttestation};
use crate::contracts::{Ledger, LedgerParams, RequestEvent};
use crate::error::Result;
use crate::filtering::{self, TimedResult};
use crate::metrics::{OpCounters, RunMetrics, TraceRow};
use crate::reputation::{self, ReputationParams};
use crate::scenario::{SchemeVariant, SimConfig};
use crate::selection::{self, EventAnchor, RingPriority};
use crate::types::{NodeId, SimTime};
use crate::vrf::{self, KeyPair, KeyRegistry, PublicKey, SecretKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

const REQUESTER: &str = "requester";
const FREELOADER_COPY_DELAY_S: f64 = 0.01;

/// Everything a run produces: metrics for the harness, the ordered event
/// trace, and the final ledger state.
pub struct SimOutcome {
    pub metrics: RunMetrics,
    pub trace: TraceLog,
    pub ledger: Ledger,
}

/// Deterministic sub-stream derivation from the scenario seed.
fn rng_for(seed: u64, tag: &str) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(vrf::digest(&[b"oraclenet.rng", &seed.to_be_bytes(), tag.as_bytes()]))
}

fn derive_u64(seed: u64, tag: &str, index: u64) -> u64 {
    let d = vrf::digest(&[
        b"oraclenet.seed",
        &seed.to_be_bytes(),
        tag.as_bytes(),
        &index.to_be_bytes(),
    ]);
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

struct SimNode {
    id: NodeId,
    keypair: KeyPair,
    behavior: NodeBehavior,
    latency: NodeLatency,
    /// Targeted-offline victims flip this off once discovered.
    online: bool,
    broadcasts_seen: u32,
}

#[derive(Clone, Debug)]
enum PlanKind {
    /// Read the source (with the given value) and seal it honestly.
    Seal { value: f64, assigned_source: usize },
    /// Copy the first ciphertext observed on the network.
    Copy,
}

#[derive(Clone, Debug)]
struct ResponsePlan {
    node_idx: usize,
    claim: RingPriority,
    arrival: SimTime,
    latency_s: f64,
    kind: PlanKind,
}

struct ConsensusRun {
    round: u8,
    epoch: u32,
    leader: NodeId,
    members: Vec<NodeId>,
    acks: BTreeSet<NodeId>,
    consensus_set: Vec<TimedResult>,
    filtered: Vec<TimedResult>,
    flag_committee: Vec<NodeId>,
    result: Option<AggregationResult>,
    agg_time: SimTime,
    committed2: bool,
    /// Submission order: leader first, then members by priority.
    submit_order: Vec<NodeId>,
}

struct TaskState {
    q: String,
    index: u32,
    post_time: SimTime,
    attempt: u32,
    width: SimTime,
    anchor: EventAnchor,
    position_counts: BTreeMap<NodeId, u32>,
    plans: BTreeMap<NodeId, ResponsePlan>,
    envelopes: Vec<FeedbackEnvelope>,
    submitters: BTreeSet<NodeId>,
    temp_keys: BTreeMap<NodeId, SecretKey>,
    revealed: BTreeSet<NodeId>,
    response_times: BTreeMap<NodeId, f64>,
    network: Option<TempNetwork>,
    group_sig: Option<collection::GroupSignature>,
    membership_changes: u64,
    join_count: usize,
    closed: bool,
    crashed: BTreeSet<NodeId>,
    consensus: Option<ConsensusRun>,
    done: bool,
}

impl TaskState {
    fn reset_attempt(&mut self) {
        self.plans.clear();
        self.envelopes.clear();
        self.submitters.clear();
        self.temp_keys.clear();
        self.revealed.clear();
        self.response_times.clear();
        self.network = None;
        self.group_sig = None;
        self.membership_changes = 0;
        self.join_count = 0;
        self.closed = false;
        self.consensus = None;
    }
}

#[derive(Clone, Debug)]
enum Event {
    PostTask { index: u32 },
    Respond { q: String, attempt: u32, node: usize },
    FreeloaderCopy { q: String, attempt: u32, node: usize },
    Close { q: String, attempt: u32, changes: u64 },
    Deadline { q: String, attempt: u32 },
    AckRound { q: String, attempt: u32, round: u8, epoch: u32, node: usize },
    LeaderTimeout { q: String, attempt: u32, round: u8, epoch: u32 },
    Submit { q: String, attempt: u32, rank: usize },
    Crash { q: String, node: usize },
}

struct Scheduled {
    time: SimTime,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

/// Per-task fault-injection plan: crash this many eventual members at random
/// points within the window after they join.
#[derive(Clone, Copy, Debug)]
pub struct FaultPlan {
    pub crash_count: usize,
    pub window_s: f64,
}

struct MetricsAcc {
    completed: u64,
    failed: u64,
    retries: u64,
    accurate: u64,
    variance_sum: f64,
    response_time_sum: f64,
    selection_counts: BTreeMap<NodeId, u64>,
    trace_rows: Vec<TraceRow>,
    aborted: bool,
}

pub struct Simulation {
    config: SimConfig,
    variant: SchemeVariant,
    clock: SimTime,
    seq: u64,
    queue: BinaryHeap<Reverse<Scheduled>>,
    ledger: Ledger,
    registry: KeyRegistry,
    nodes: Vec<SimNode>,
    node_index: BTreeMap<NodeId, usize>,
    source_ids: Vec<String>,
    source_keys: Vec<KeyPair>,
    source: DataSourceProcess,
    tasks: BTreeMap<String, TaskState>,
    trace: TraceLog,
    acc: MetricsAcc,
    counters: OpCounters,
    rng_jitter: ChaCha12Rng,
    rng_offsets: ChaCha12Rng,
    rng_hop: ChaCha12Rng,
    rng_fault: ChaCha12Rng,
    fault: Option<FaultPlan>,
    fault_victim_ranks: BTreeSet<usize>,
}

impl Simulation {
    pub fn new(config: SimConfig, variant: SchemeVariant) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;

        let ledger_params = LedgerParams {
            min_deposit: config.min_deposit,
            reputation: ReputationParams {
                alpha: config.alpha,
                reputation_floor: 1.0,
                slash_threshold: config.slash_threshold,
            },
        };
        let mut ledger = Ledger::new(ledger_params, seed);
        let mut registry = KeyRegistry::new();

        // Data sources share one ground-truth trajectory; each source signs
        // its own attestations.
        let source_ids: Vec<String> =
            (0..config.source_count).map(|i| format!("src-{i}")).collect();
        let source_keys: Vec<KeyPair> = (0..config.source_count)
            .map(|i| vrf::setup(derive_u64(seed, "source-key", i as u64)))
            .collect();
        for kp in &source_keys {
            registry.register(kp);
        }
        let source = DataSourceProcess::new(
            config.base_value,
            config.drift_rate,
            config.noise_std,
            vrf::digest(&[b"oraclenet.source-walk", &seed.to_be_bytes()]),
        );

        let behaviors = assign_behaviors(&config);
        let mut rng_node_latency = rng_for(seed, "node-latency");
        let mut nodes = Vec::with_capacity(config.node_count);
        let mut node_index = BTreeMap::new();
        ledger.mint(REQUESTER, config.reward_per_task * config.task_count as u64);
        for i in 0..config.node_count {
            let id = NodeId::nth(i);
            let keypair = vrf::setup(derive_u64(seed, "node-key", i as u64));
            registry.register(&keypair);
            ledger.mint(id.as_str(), config.node_funds);
            ledger.register_node(&id, keypair.public_key, config.min_deposit)?;
            let latency = NodeLatency::draw(
                config.latency_mean_s,
                config.latency_std_s,
                config.jitter_divisor,
                &mut rng_node_latency,
            );
            node_index.insert(id.clone(), i);
            nodes.push(SimNode {
                id,
                keypair,
                behavior: behaviors[i],
                latency,
                online: true,
                broadcasts_seen: 0,
            });
        }

        Ok(Simulation {
            rng_jitter: rng_for(seed, "jitter"),
            rng_offsets: rng_for(seed, "offsets"),
            rng_hop: rng_for(seed, "hop"),
            rng_fault: rng_for(seed, "fault"),
            config,
            variant,
            clock: SimTime::ZERO,
            seq: 0,
            queue: BinaryHeap::new(),
            ledger,
            registry,
            nodes,
            node_index,
            source_ids,
            source_keys,
            source,
            tasks: BTreeMap::new(),
            trace: TraceLog::default(),
            acc: MetricsAcc {
                completed: 0,
                failed: 0,
                retries: 0,
                accurate: 0,
                variance_sum: 0.0,
                response_time_sum: 0.0,
                selection_counts: BTreeMap::new(),
                trace_rows: Vec::new(),
                aborted: false,
            },
            counters: OpCounters::default(),
            fault: None,
            fault_victim_ranks: BTreeSet::new(),
        })
    }

    /// Arms per-task fault injection: `crash_count` eventual members crash at
    /// random points after joining.
    pub fn with_fault_plan(mut self, plan: FaultPlan) -> Self {
        self.fault = Some(plan);
        self
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    fn schedule(&mut self, time: SimTime, event: Event) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Reverse(Scheduled { time, seq, event }));
    }

    fn hop(&mut self) -> SimTime {
        SimTime::from_secs_f64(sample_latency(
            self.config.hop_mean_s.max(LATENCY_FLOOR_S),
            self.config.hop_std_s,
            &mut self.rng_hop,
        ))
    }

    /// Runs the whole scenario to completion (or the horizon).
    pub fn run(mut self) -> Result<SimOutcome> {
        let horizon = SimTime::from_secs_f64(self.config.horizon_s);
        if self.config.task_count > 0 {
            self.schedule(SimTime::ZERO, Event::PostTask { index: 0 });
        }
        while let Some(Reverse(next)) = self.queue.pop() {
            debug_assert!(next.time >= self.clock, "clock must be monotone");
            if next.time > horizon {
                self.trace
                    .push(self.clock, TraceEvent::HorizonAbort { pending: self.queue.len() + 1 });
                self.acc.aborted = true;
                break;
            }
            self.clock = next.time;
            self.dispatch(next.event)?;
        }
        debug_assert!(self.ledger.conserves_tokens());
        let metrics = RunMetrics {
            accuracy: ratio(self.acc.accurate, self.acc.completed),
            mean_variance: mean(self.acc.variance_sum, self.acc.completed),
            mean_response_time: mean(self.acc.response_time_sum, self.acc.completed),
            completed: self.acc.completed,
            failed: self.acc.failed,
            retry_count: self.acc.retries,
            aborted: self.acc.aborted,
            selection_counts: std::mem::take(&mut self.acc.selection_counts),
            reputation_traces: std::mem::take(&mut self.acc.trace_rows),
            counters: self.counters,
        };
        Ok(SimOutcome { metrics, trace: self.trace, ledger: self.ledger })
    }

    fn dispatch(&mut self, event: Event) -> Result<()> {
        match event {
            Event::PostTask { index } => self.post_task(index),
            Event::Respond { q, attempt, node } => self.respond(&q, attempt, node),
            Event::FreeloaderCopy { q, attempt, node } => self.freeloader_copy(&q, attempt, node),
            Event::Close { q, attempt, changes } => self.close(&q, attempt, Some(changes)),
            Event::Deadline { q, attempt } => self.deadline(&q, attempt),
            Event::AckRound { q, attempt, round, epoch, node } => {
                self.ack_round(&q, attempt, round, epoch, node)
            }
            Event::LeaderTimeout { q, attempt, round, epoch } => {
                self.leader_timeout(&q, attempt, round, epoch)
            }
            Event::Submit { q, attempt, rank } => self.submit(&q, attempt, rank),
            Event::Crash { q, node } => self.crash(&q, node),
        }
    }

    // ------------------------------------------------------------------
    // Task posting and response planning
    // ------------------------------------------------------------------

    fn post_task(&mut self, index: u32) -> Result<()> {
        let q = format!("task-{index:05}");
        let event = RequestEvent {
            q: q.clone(),
            sources: self.source_ids.clone(),
            reward: self.config.reward_per_task,
            committee_size: self.config.committee_size,
            window_width: SimTime::from_secs_f64(self.config.window_width_s),
        };
        self.ledger.post_request(REQUESTER, event, self.config.reward_per_task)?;
        let anchor = selection::compute_anchor(q.as_bytes(), &self.ledger.beacon())?;

        let mut task = TaskState {
            q: q.clone(),
            index,
            post_time: self.clock,
            attempt: 0,
            width: SimTime::from_secs_f64(self.config.window_width_s),
            anchor,
            position_counts: BTreeMap::new(),
            plans: BTreeMap::new(),
            envelopes: Vec::new(),
            submitters: BTreeSet::new(),
            temp_keys: BTreeMap::new(),
            revealed: BTreeSet::new(),
            response_times: BTreeMap::new(),
            network: None,
            group_sig: None,
            membership_changes: 0,
            join_count: 0,
            closed: false,
            crashed: BTreeSet::new(),
            consensus: None,
            done: false,
        };
        self.trace.push(self.clock, TraceEvent::TaskPosted { q: q.clone(), attempt: 0 });
        self.snapshot_positions(&mut task);
        if self.fault.is_some() {
            self.draw_fault_victims();
        }
        self.plan_responses(&mut task)?;
        self.schedule_plans(&task);
        let deadline = self.clock + SimTime::from_secs_f64(self.config.collect_timeout_s);
        self.schedule(deadline, Event::Deadline { q: q.clone(), attempt: 0 });
        self.tasks.insert(q, task);
        Ok(())
    }

    /// Reads each registered node's reputation at post time and fixes its
    /// ring-position count for this task.
    fn snapshot_positions(&self, task: &mut TaskState) {
        for node in &self.nodes {
            if !self.ledger.is_registered(&node.id) {
                continue;
            }
            let rep = if self.variant.reputation_weighted() {
                self.ledger.reputation_of(&node.id).unwrap_or(1.0)
            } else {
                1.0
            };
            task.position_counts.insert(node.id.clone(), selection::ring_positions(rep));
        }
    }

    fn draw_fault_victims(&mut self) {
        self.fault_victim_ranks.clear();
        let Some(plan) = self.fault else { return };
        let t = self.config.committee_size;
        let count = plan.crash_count.min(t);
        while self.fault_victim_ranks.len() < count {
            let rank = self.rng_fault.gen_range(0..t);
            self.fault_victim_ranks.insert(rank);
        }
    }

    /// Decides who responds this attempt and with what: every active node
    /// computes its priority, self-selects against the distance gate, and
    /// plans its read (honest or adversarial) at its sampled arrival time.
    fn plan_responses(&mut self, task: &mut TaskState) -> Result<()> {
        let t = self.config.committee_size;
        let total_positions: u64 =
            task.position_counts.values().map(|&c| c as u64).sum::<u64>().max(1);
        let frac = self.config.participation_margin * t as f64 / total_positions as f64;
        let gate = if frac >= 1.0 { u64::MAX } else { (frac * u64::MAX as f64) as u64 };

        let mut plans: Vec<ResponsePlan> = Vec::new();
        for idx in 0..self.nodes.len() {
            let (id, online, behavior, sk) = {
                let n = &self.nodes[idx];
                (n.id.clone(), n.online, n.behavior, n.keypair.secret_key)
            };
            let Some(&count) = task.position_counts.get(&id) else { continue };
            if !online {
                continue;
            }
            let claim =
                selection::compute_ring_priority(&sk, id.clone(), &task.anchor, count as f64)?;
            if claim.distance >= gate {
                continue;
            }
            let mut latency_s = self.nodes[idx].latency.request_latency(&mut self.rng_jitter);
            if let NodeBehavior::Lazy { extra_delay } = behavior {
                latency_s += extra_delay;
            }
            let arrival = task.post_time + SimTime::from_secs_f64(latency_s);
            let kind = match behavior {
                NodeBehavior::Freeloader => PlanKind::Copy,
                NodeBehavior::FalseData { offset_std } => {
                    let truth = self.source.ground_truth(arrival);
                    let offset = if offset_std > 0.0 {
                        Normal::new(0.0, offset_std)
                            .expect("valid normal")
                            .sample(&mut self.rng_offsets)
                    } else {
                        0.0
                    };
                    PlanKind::Seal {
                        value: truth + offset,
                        assigned_source: selection::assign_data_source(
                            &claim,
                            self.source_ids.len(),
                        )?,
                    }
                }
                _ => PlanKind::Seal {
                    value: self.source.ground_truth(arrival),
                    assigned_source: selection::assign_data_source(&claim, self.source_ids.len())?,
                },
            };
            plans.push(ResponsePlan { node_idx: idx, claim, arrival, latency_s, kind });
        }

        // Freeloaders fire shortly after the first observable broadcast.
        let first_seal_arrival = plans
            .iter()
            .filter(|p| matches!(p.kind, PlanKind::Seal { .. }))
            .map(|p| p.arrival)
            .min();
        let copy_at =
            first_seal_arrival.map(|a| a + SimTime::from_secs_f64(FREELOADER_COPY_DELAY_S));
        plans.retain(|p| !matches!(p.kind, PlanKind::Copy) || copy_at.is_some());
        for p in &mut plans {
            if matches!(p.kind, PlanKind::Copy) {
                let at = copy_at.expect("retained only when present");
                p.arrival = at;
                p.latency_s = (at - task.post_time).as_secs_f64().max(LATENCY_FLOOR_S);
            }
        }

        for p in plans {
            task.plans.insert(self.nodes[p.node_idx].id.clone(), p);
        }
        Ok(())
    }

    fn schedule_plans(&mut self, task: &TaskState) {
        let mut scheduled: Vec<(SimTime, Event)> = Vec::new();
        for plan in task.plans.values() {
            let event = match plan.kind {
                PlanKind::Copy => Event::FreeloaderCopy {
                    q: task.q.clone(),
                    attempt: task.attempt,
                    node: plan.node_idx,
                },
                PlanKind::Seal { .. } => Event::Respond {
                    q: task.q.clone(),
                    attempt: task.attempt,
                    node: plan.node_idx,
                },
            };
            scheduled.push((plan.arrival, event));
        }
        for (at, event) in scheduled {
            self.schedule(at, event);
        }
    }

    // ------------------------------------------------------------------
    // Collection
    // ------------------------------------------------------------------

    fn respond(&mut self, q: &str, attempt: u32, node_idx: usize) -> Result<()> {
        let node_id = self.nodes[node_idx].id.clone();
        let (plan, anchor) = {
            let Some(task) = self.tasks.get(q) else { return Ok(()) };
            if task.done || task.attempt != attempt || task.crashed.contains(&node_id) {
                return Ok(());
            }
            let Some(plan) = task.plans.get(&node_id) else { return Ok(()) };
            (plan.clone(), task.anchor.clone())
        };
        let PlanKind::Seal { value, assigned_source } = plan.kind else { return Ok(()) };

        // The broadcast is now observable: targeted-offline victims get
        // discovered and knocked out for later tasks.
        self.note_broadcast(node_idx);

        if self.tasks[q].closed {
            self.trace.push(
                self.clock,
                TraceEvent::EnvelopeRejected { q: q.to_owned(), node: node_id, reason: "late" },
            );
            return Ok(());
        }

        let temp = vrf::derive_temp_keypair(
            &self.nodes[node_idx].keypair.secret_key,
            q.as_bytes(),
            attempt,
        );
        let attestation = SourceAttestation::issue(
            &self.source_keys[assigned_source].secret_key,
            &self.source_ids[assigned_source],
            value,
            plan.arrival,
        );
        let envelope = collection::seal_feedback(
            &self.registry,
            &self.source_keys[assigned_source].public_key,
            &self.nodes[node_idx].keypair.public_key,
            &anchor,
            &temp.secret_key,
            node_id,
            value,
            plan.arrival,
            &attestation,
            plan.claim.clone(),
        )?;
        self.accept_envelope(q, envelope, temp.secret_key, plan.latency_s)
    }

    fn freeloader_copy(&mut self, q: &str, attempt: u32, node_idx: usize) -> Result<()> {
        let node_id = self.nodes[node_idx].id.clone();
        let (plan, victim) = {
            let Some(task) = self.tasks.get(q) else { return Ok(()) };
            if task.done || task.attempt != attempt || task.crashed.contains(&node_id) {
                return Ok(());
            }
            let Some(plan) = task.plans.get(&node_id) else { return Ok(()) };
            let Some(victim) = task.envelopes.first() else { return Ok(()) };
            (plan.clone(), victim.clone())
        };
        self.note_broadcast(node_idx);
        if self.tasks[q].closed {
            self.trace.push(
                self.clock,
                TraceEvent::EnvelopeRejected { q: q.to_owned(), node: node_id, reason: "late" },
            );
            return Ok(());
        }

        // The freeloader sees ciphertexts only: it reuses the victim's sealed
        // bytes under its own identity, temporary key and priority claim.
        let temp = vrf::derive_temp_keypair(
            &self.nodes[node_idx].keypair.secret_key,
            q.as_bytes(),
            attempt,
        );
        let stolen = FeedbackEnvelope {
            event_id: victim.event_id.clone(),
            submitter: node_id,
            temp_public_key: temp.public_key,
            ciphertext: victim.ciphertext.clone(),
            integrity_tag: victim.integrity_tag,
            partial_signature: vrf::generate(&temp.secret_key, &partial_message(q.as_bytes())),
            attestation_commitment: victim.attestation_commitment,
            timestamp: self.clock,
            priority_claim: plan.claim.clone(),
        };
        let latency = (self.clock - self.tasks[q].post_time).as_secs_f64().max(LATENCY_FLOOR_S);
        self.accept_envelope(q, stolen, temp.secret_key, latency)
    }

    /// Receiver-side validation and bookkeeping shared by all broadcasts.
    fn accept_envelope(
        &mut self,
        q: &str,
        envelope: FeedbackEnvelope,
        temp_sk: SecretKey,
        latency_s: f64,
    ) -> Result<()> {
        let node_id = envelope.submitter.clone();
        let distance = envelope.priority_claim.distance;
        let t = self.config.committee_size;
        let pk = self.nodes[self.node_index[&node_id]].keypair.public_key;

        let mut task = self.tasks.remove(q).expect("task exists");
        let claim_ok = selection::verify_ring_priority(
            &self.registry,
            &pk,
            &task.anchor,
            &envelope.priority_claim,
        );
        let count_ok = task.position_counts.get(&node_id).copied()
            == Some(envelope.priority_claim.positions.len() as u32);
        if !claim_ok || !count_ok || task.submitters.contains(&node_id) {
            self.trace.push(
                self.clock,
                TraceEvent::EnvelopeRejected {
                    q: q.to_owned(),
                    node: node_id,
                    reason: if claim_ok && count_ok { "duplicate" } else { "bad-claim" },
                },
            );
            self.tasks.insert(q.to_owned(), task);
            return Ok(());
        }

        task.envelopes.push(envelope);
        task.submitters.insert(node_id.clone());
        task.temp_keys.insert(node_id.clone(), temp_sk);
        task.response_times.insert(node_id.clone(), latency_s);
        self.trace.push(
            self.clock,
            TraceEvent::EnvelopeBroadcast { q: q.to_owned(), node: node_id.clone(), distance },
        );

        // Keys publish immediately when the group signature already exists.
        if task.group_sig.is_some() && !task.crashed.contains(&node_id) {
            task.revealed.insert(node_id.clone());
            self.trace
                .push(self.clock, TraceEvent::KeyRevealed { q: q.to_owned(), node: node_id.clone() });
        }

        let (network, outcome) =
            join_network(task.network.take(), q.as_bytes(), t, node_id.clone(), distance);
        task.network = Some(network);
        self.trace.push(
            self.clock,
            TraceEvent::NetworkJoin {
                q: q.to_owned(),
                node: node_id.clone(),
                outcome: format!("{outcome:?}"),
            },
        );
        let joined = !matches!(outcome, JoinOutcome::Rejected | JoinOutcome::Duplicate);
        if joined {
            task.membership_changes += 1;
            let rank = task.join_count;
            task.join_count += 1;
            if self.fault.is_some() && self.fault_victim_ranks.contains(&rank) {
                let window = self.fault.expect("fault plan").window_s;
                let delay = SimTime::from_secs_f64(self.rng_fault.gen_range(0.0..window));
                let node = self.node_index[&node_id];
                self.schedule(self.clock + delay, Event::Crash { q: q.to_owned(), node });
            }
        }

        // Threshold detection: the t-th distinct submitter completes the
        // group signature and unlocks the reveal phase.
        if task.group_sig.is_none() && task.submitters.len() >= t {
            match collection::try_form_group_signature(&task.envelopes, t)? {
                GroupSignatureStatus::Formed(sig) => {
                    self.trace.push(
                        self.clock,
                        TraceEvent::GroupSignatureFormed {
                            q: q.to_owned(),
                            contributors: sig.contributing_nodes.len(),
                        },
                    );
                    task.group_sig = Some(sig);
                    let reveals: Vec<NodeId> = task
                        .submitters
                        .iter()
                        .filter(|n| !task.crashed.contains(*n))
                        .cloned()
                        .collect();
                    for n in reveals {
                        task.revealed.insert(n.clone());
                        self.trace
                            .push(self.clock, TraceEvent::KeyRevealed { q: q.to_owned(), node: n });
                    }
                    if self.variant.filter_enabled() {
                        let at = self.clock + SimTime::from_secs_f64(self.config.settle_s);
                        let attempt = task.attempt;
                        self.schedule(at, Event::Close { q: q.to_owned(), attempt, changes: 0 });
                    }
                }
                GroupSignatureStatus::NotYet => unreachable!("threshold just reached"),
            }
        }

        // Without the filter, collection closes once the committee has been
        // stable for the settle window.
        if !self.variant.filter_enabled() && joined {
            let changes = task.membership_changes;
            let attempt = task.attempt;
            let at = self.clock + SimTime::from_secs_f64(self.config.settle_s);
            self.schedule(at, Event::Close { q: q.to_owned(), attempt, changes });
        }
        self.tasks.insert(q.to_owned(), task);
        Ok(())
    }

    fn note_broadcast(&mut self, node_idx: usize) {
        let node = &mut self.nodes[node_idx];
        node.broadcasts_seen += 1;
        if let NodeBehavior::TargetedOffline { after_broadcasts } = node.behavior {
            if node.broadcasts_seen >= after_broadcasts {
                node.online = false;
            }
        }
    }

    // ------------------------------------------------------------------
    // Close, reveal, filter, consensus
    // ------------------------------------------------------------------

    fn close(&mut self, q: &str, attempt: u32, debounce: Option<u64>) -> Result<()> {
        {
            let Some(task) = self.tasks.get(q) else { return Ok(()) };
            if task.done || task.closed || task.attempt != attempt || task.group_sig.is_none() {
                return Ok(());
            }
            if !self.variant.filter_enabled() {
                if let Some(changes) = debounce {
                    if changes != task.membership_changes {
                        return Ok(()); // membership moved; a fresher close is queued
                    }
                }
            }
        }

        let mut task = self.tasks.remove(q).expect("task exists");
        task.closed = true;
        self.trace.push(
            self.clock,
            TraceEvent::CollectionClosed { q: q.to_owned(), candidates: task.envelopes.len() },
        );

        // Reveal and decrypt everything published; log each plaintext access.
        let keys: BTreeMap<NodeId, SecretKey> = task
            .temp_keys
            .iter()
            .filter(|(n, _)| task.revealed.contains(*n))
            .map(|(n, k)| (n.clone(), *k))
            .collect();
        let group_sig = task.group_sig.clone().expect("checked");
        let source_keys = &self.source_keys;
        let source_ids = &self.source_ids;
        let lookup = |id: &str| -> Option<&PublicKey> {
            source_ids.iter().position(|s| s == id).map(|i| &source_keys[i].public_key)
        };
        let outcome = collection::reveal_and_decrypt(
            &task.envelopes,
            &group_sig,
            &keys,
            &self.registry,
            &lookup,
            source_ids,
        )?;
        for r in &outcome.results {
            self.trace.push(
                self.clock,
                TraceEvent::PlaintextAccess { q: q.to_owned(), node: r.node_id.clone() },
            );
        }

        let t = self.config.committee_size;
        let consensus_set = dedupe_sort_truncate(&outcome.results, t);

        // The network members are exactly the top-t claims among candidates;
        // count the ranking cost of this close.
        let claims: Vec<RingPriority> =
            task.envelopes.iter().map(|e| e.priority_claim.clone()).collect();
        let ranked =
            selection::select_top_t_counted(&claims, t, &mut self.counters.selection_comparisons);
        let network = task.network.clone().expect("network exists with envelopes");
        debug_assert_eq!(
            network.member_ids(),
            ranked.iter().map(|c| c.node_id.clone()).collect::<Vec<_>>(),
            "temporary network diverged from top-t selection"
        );

        if consensus_set.is_empty() {
            self.tasks.insert(q.to_owned(), task);
            return self.retry_or_fail(q, "no-valid-results");
        }

        // Filter (or bypass), then the acceptance threshold.
        let filtered = if self.variant.filter_enabled() {
            let kept = filtering::filter_window_counted(
                &consensus_set,
                task.width,
                &mut self.counters.filter_windows,
            )?;
            let kept_ids: BTreeSet<&NodeId> = kept.iter().map(|r| &r.node_id).collect();
            let dropped: Vec<NodeId> = consensus_set
                .iter()
                .map(|r| &r.node_id)
                .filter(|n| !kept_ids.contains(*n))
                .cloned()
                .collect();
            self.trace.push(
                self.clock,
                TraceEvent::FilterDecision {
                    q: q.to_owned(),
                    kept: kept.iter().map(|r| r.node_id.clone()).collect(),
                    dropped,
                },
            );
            if kept.len() < self.config.min_count {
                self.tasks.insert(q.to_owned(), task);
                return self.retry_or_fail(q, "below-zeta");
            }
            kept
        } else {
            consensus_set.clone()
        };

        // Judged committee: the network members plus anyone promoted into the
        // consensus set by a failed reveal.
        let mut flag_committee: Vec<NodeId> = network.member_ids();
        for r in &consensus_set {
            if !flag_committee.contains(&r.node_id) {
                flag_committee.push(r.node_id.clone());
            }
        }

        let mut net = network;
        let mut leader = net.leader.clone();
        if task.crashed.contains(&leader) {
            match net.promote_leader(&task.crashed) {
                Some(new_leader) => {
                    self.trace.push(
                        self.clock,
                        TraceEvent::LeaderChanged {
                            q: q.to_owned(),
                            from: leader.clone(),
                            to: new_leader.clone(),
                            epoch: 0,
                        },
                    );
                    leader = new_leader;
                }
                None => {
                    self.tasks.insert(q.to_owned(), task);
                    return self.retry_or_fail(q, "all-members-crashed");
                }
            }
        }

        let members = net.member_ids();
        let mut submit_order = vec![leader.clone()];
        submit_order.extend(members.iter().filter(|m| **m != leader).cloned());

        task.network = Some(net);
        task.consensus = Some(ConsensusRun {
            round: 1,
            epoch: 0,
            leader: leader.clone(),
            members,
            acks: BTreeSet::from([leader]),
            consensus_set,
            filtered,
            flag_committee,
            result: None,
            agg_time: SimTime::ZERO,
            committed2: false,
            submit_order,
        });
        self.tasks.insert(q.to_owned(), task);
        self.start_round(q, 1, 0);
        self.maybe_commit(q)
    }

    /// Schedules member acknowledgements and the leader watchdog for a round.
    fn start_round(&mut self, q: &str, round: u8, epoch: u32) {
        let mut acks: Vec<usize> = Vec::new();
        let attempt;
        {
            let task = &self.tasks[q];
            attempt = task.attempt;
            let run = task.consensus.as_ref().expect("consensus running");
            for m in &run.members {
                if *m == run.leader || task.crashed.contains(m) {
                    continue;
                }
                acks.push(self.node_index[m]);
            }
        }
        for node in acks {
            let rtt = self.hop() + self.hop();
            self.schedule(
                self.clock + rtt,
                Event::AckRound { q: q.to_owned(), attempt, round, epoch, node },
            );
        }
        let timeout = SimTime::from_secs_f64(self.config.leader_timeout_s);
        self.schedule(
            self.clock + timeout,
            Event::LeaderTimeout { q: q.to_owned(), attempt, round, epoch },
        );
    }

    fn ack_round(
        &mut self,
        q: &str,
        attempt: u32,
        round: u8,
        epoch: u32,
        node_idx: usize,
    ) -> Result<()> {
        let node_id = self.nodes[node_idx].id.clone();
        {
            let Some(task) = self.tasks.get_mut(q) else { return Ok(()) };
            if task.done || task.attempt != attempt || task.crashed.contains(&node_id) {
                return Ok(());
            }
            let Some(run) = task.consensus.as_mut() else { return Ok(()) };
            if run.round != round || run.epoch != epoch || (round == 2 && run.committed2) {
                return Ok(());
            }
            run.acks.insert(node_id);
        }
        self.maybe_commit(q)
    }

    fn maybe_commit(&mut self, q: &str) -> Result<()> {
        enum Advance {
            None,
            Round2 { epoch: u32 },
            Submit,
        }
        let advance;
        {
            let Some(task) = self.tasks.get_mut(q) else { return Ok(()) };
            let post_time = task.post_time;
            let Some(run) = task.consensus.as_mut() else { return Ok(()) };
            if run.acks.len() < aggregation::quorum(run.members.len()) {
                return Ok(());
            }
            if run.round == 1 {
                let payload = aggregation::canonical_results_payload(&run.consensus_set);
                self.trace.push(
                    self.clock,
                    TraceEvent::RoundCommitted {
                        q: q.to_owned(),
                        round: 1,
                        epoch: run.epoch,
                        payload_hash: vrf::hash_to_ring(&payload),
                    },
                );
                run.round = 2;
                run.acks = BTreeSet::from([run.leader.clone()]);
                advance = Advance::Round2 { epoch: run.epoch };
            } else if !run.committed2 {
                run.committed2 = true;
                run.agg_time = self.clock;
                let result = aggregation::run_round2_and_aggregate(
                    q,
                    &run.flag_committee,
                    &run.filtered,
                    self.config.strategy,
                    (self.clock - post_time).as_secs_f64(),
                )?;
                let payload = aggregation::canonical_results_payload(&run.filtered);
                self.trace.push(
                    self.clock,
                    TraceEvent::RoundCommitted {
                        q: q.to_owned(),
                        round: 2,
                        epoch: run.epoch,
                        payload_hash: vrf::hash_to_ring(&payload),
                    },
                );
                run.result = Some(result);
                advance = Advance::Submit;
            } else {
                advance = Advance::None;
            }
        }
        match advance {
            Advance::None => Ok(()),
            Advance::Round2 { epoch } => {
                self.start_round(q, 2, epoch);
                // A committee of one commits immediately.
                self.maybe_commit(q)
            }
            Advance::Submit => {
                let attempt = self.tasks[q].attempt;
                let order_len =
                    self.tasks[q].consensus.as_ref().expect("committed").submit_order.len();
                let first = self.clock + self.hop();
                self.schedule(first, Event::Submit { q: q.to_owned(), attempt, rank: 0 });
                let step = SimTime::from_secs_f64(self.config.submit_timeout_s);
                let mut at = first;
                for rank in 1..order_len {
                    at = at + step;
                    self.schedule(at, Event::Submit { q: q.to_owned(), attempt, rank });
                }
                Ok(())
            }
        }
    }

    fn leader_timeout(&mut self, q: &str, attempt: u32, round: u8, epoch: u32) -> Result<()> {
        enum Outcome {
            Ignore,
            Requeue,
            QuorumLost,
            Promoted { epoch: u32 },
        }
        let outcome;
        {
            let Some(task) = self.tasks.get_mut(q) else { return Ok(()) };
            if task.done || task.attempt != attempt {
                return Ok(());
            }
            let crashed = task.crashed.clone();
            let network = &mut task.network;
            match task.consensus.as_mut() {
                None => outcome = Outcome::Ignore,
                Some(run) => {
                    if run.round != round || run.epoch != epoch || (round == 2 && run.committed2) {
                        outcome = Outcome::Ignore;
                    } else {
                        let alive = run.members.iter().filter(|m| !crashed.contains(m)).count();
                        if alive < aggregation::quorum(run.members.len()) {
                            outcome = Outcome::QuorumLost;
                        } else if !crashed.contains(&run.leader) {
                            outcome = Outcome::Requeue;
                        } else {
                            // Crash-fault takeover: highest-priority survivor.
                            let net = network.as_mut().expect("network exists");
                            let promoted =
                                net.promote_leader(&crashed).expect("alive quorum has a member");
                            self.trace.push(
                                self.clock,
                                TraceEvent::LeaderChanged {
                                    q: q.to_owned(),
                                    from: run.leader.clone(),
                                    to: promoted.clone(),
                                    epoch: epoch + 1,
                                },
                            );
                            run.leader = promoted.clone();
                            run.epoch = epoch + 1;
                            run.acks = BTreeSet::from([promoted.clone()]);
                            let mut order = vec![promoted.clone()];
                            order.extend(run.members.iter().filter(|m| **m != promoted).cloned());
                            run.submit_order = order;
                            outcome = Outcome::Promoted { epoch: run.epoch };
                        }
                    }
                }
            }
        }
        match outcome {
            Outcome::Ignore => Ok(()),
            Outcome::Requeue => {
                // Leader alive, acks still in flight; check back later.
                let at = self.clock + SimTime::from_secs_f64(self.config.leader_timeout_s);
                self.schedule(at, Event::LeaderTimeout { q: q.to_owned(), attempt, round, epoch });
                Ok(())
            }
            Outcome::QuorumLost => self.retry_or_fail(q, "consensus-quorum-lost"),
            Outcome::Promoted { epoch } => {
                self.start_round(q, round, epoch);
                self.maybe_commit(q)
            }
        }
    }

    // ------------------------------------------------------------------
    // Submission and finalization
    // ------------------------------------------------------------------

    fn submit(&mut self, q: &str, attempt: u32, rank: usize) -> Result<()> {
        let (submitter, mut result, agg_time) = {
            let Some(task) = self.tasks.get(q) else { return Ok(()) };
            if task.done || task.attempt != attempt {
                return Ok(());
            }
            let Some(run) = task.consensus.as_ref() else { return Ok(()) };
            if !run.committed2 {
                return Ok(());
            }
            let Some(designated) = run.submit_order.get(rank) else { return Ok(()) };
            if task.crashed.contains(designated) {
                return Ok(()); // the next watchdog in rank order covers this
            }
            (designated.clone(), run.result.clone().expect("committed"), run.agg_time)
        };
        if self.ledger.result_of(q).is_some() {
            return Ok(());
        }

        result.response_time = (self.clock - self.tasks[q].post_time).as_secs_f64();
        let response_times = self.tasks[q].response_times.clone();
        self.ledger.finalize_task(q, &result, &response_times, &submitter)?;
        self.trace.push(
            self.clock,
            TraceEvent::ResultSubmitted {
                q: q.to_owned(),
                node: submitter,
                value: result.value,
            },
        );
        self.trace.push(
            self.clock,
            TraceEvent::TaskFinalized {
                q: q.to_owned(),
                value: result.value,
                response_time: result.response_time,
            },
        );

        // Metrics: task accuracy against ground truth at aggregation time,
        // contributor-value dispersion, and reputation traces.
        let truth = self.source.ground_truth(agg_time);
        let tolerance = (self.config.epsilon_rel * truth.abs()).max(self.config.epsilon_abs);
        if (result.value - truth).abs() <= tolerance {
            self.acc.accurate += 1;
        }
        let index;
        {
            let task = self.tasks.get_mut(q).expect("task exists");
            let contributor_values: Vec<f64> = task
                .consensus
                .as_ref()
                .expect("committed")
                .filtered
                .iter()
                .map(|r| r.value)
                .collect();
            self.acc.variance_sum += population_variance(&contributor_values);
            self.acc.response_time_sum += result.response_time;
            self.acc.completed += 1;
            index = task.index;
            task.done = true;
        }
        for node in result.correct_flags.keys() {
            *self.acc.selection_counts.entry(node.clone()).or_default() += 1;
        }
        let params = *self.ledger.reputation_params();
        for node in result.correct_flags.keys() {
            if let Some(rec) = self.ledger.reputation_record(node) {
                self.acc.trace_rows.push(TraceRow {
                    task_index: index,
                    node_id: node.clone(),
                    total_services: rec.total_services,
                    mean_response_time: rec.mean_response_time,
                    accuracy: rec.accuracy(),
                    reputation: reputation::compute_reputation(rec, &params),
                });
            }
        }
        self.conclude(index);
        Ok(())
    }

    fn deadline(&mut self, q: &str, attempt: u32) -> Result<()> {
        let has_sig;
        {
            let Some(task) = self.tasks.get(q) else { return Ok(()) };
            if task.done || task.attempt != attempt || task.closed {
                return Ok(());
            }
            has_sig = task.group_sig.is_some();
        }
        if has_sig {
            // Stragglers kept the membership churning (or the threshold
            // arrived late): aggregate with what exists.
            self.close(q, attempt, None)
        } else {
            self.retry_or_fail(q, "insufficient-responders")
        }
    }

    fn retry_or_fail(&mut self, q: &str, reason: &'static str) -> Result<()> {
        let mut task = self.tasks.remove(q).expect("task exists");
        let index = task.index;
        if task.attempt + 1 < self.config.max_attempts {
            task.attempt += 1;
            task.width = filtering::grow_width(task.width);
            task.reset_attempt();
            self.acc.retries += 1;
            self.trace.push(
                self.clock,
                TraceEvent::RetryScheduled {
                    q: q.to_owned(),
                    attempt: task.attempt,
                    new_width: task.width,
                },
            );
            // Fresh reads and latencies; same anchor, same priorities.
            self.plan_responses(&mut task)?;
            self.schedule_plans(&task);
            let deadline = self.clock + SimTime::from_secs_f64(self.config.collect_timeout_s);
            let attempt = task.attempt;
            self.schedule(deadline, Event::Deadline { q: q.to_owned(), attempt });
            self.tasks.insert(q.to_owned(), task);
            return Ok(());
        }
        task.done = true;
        self.tasks.insert(q.to_owned(), task);
        self.trace.push(self.clock, TraceEvent::TaskFailed { q: q.to_owned(), reason });
        self.acc.failed += 1;
        self.conclude(index);
        Ok(())
    }

    fn conclude(&mut self, index: u32) {
        let next = index + 1;
        if (next as usize) < self.config.task_count {
            let at = self.clock + SimTime::from_secs_f64(self.config.task_gap_s);
            self.schedule(at, Event::PostTask { index: next });
        }
    }

    fn crash(&mut self, q: &str, node_idx: usize) -> Result<()> {
        let node_id = self.nodes[node_idx].id.clone();
        let Some(task) = self.tasks.get_mut(q) else { return Ok(()) };
        if task.done || task.crashed.contains(&node_id) {
            return Ok(());
        }
        task.crashed.insert(node_id.clone());
        // A crash before the reveal withholds the key; after, it is public.
        if task.group_sig.is_none() {
            task.revealed.remove(&node_id);
        }
        self.trace.push(self.clock, TraceEvent::MemberCrashed { q: q.to_owned(), node: node_id });
        Ok(())
    }
}

fn partial_message(event_id: &[u8]) -> Vec<u8> {
    let mut m = Vec::with_capacity(event_id.len() + 21);
    m.extend_from_slice(b"oraclenet.partial-sig");
    m.extend_from_slice(event_id);
    m
}

fn assign_behaviors(config: &SimConfig) -> Vec<NodeBehavior> {
    let n = config.node_count;
    let malicious = (config.malicious_fraction * n as f64).round() as usize;
    let mut behaviors = vec![NodeBehavior::Honest; n];
    if malicious == 0 {
        return behaviors;
    }
    let make = |name: &str, cluster: u32| -> NodeBehavior {
        match name {
            "false_data" => NodeBehavior::FalseData { offset_std: config.false_data_offset_std },
            "lazy" => NodeBehavior::Lazy { extra_delay: config.lazy_extra_delay_s },
            "freeloader" => NodeBehavior::Freeloader,
            "targeted_offline" => {
                NodeBehavior::TargetedOffline { after_broadcasts: config.targeted_after_broadcasts }
            }
            "sybil" => NodeBehavior::SybilMember { cluster },
            other => unreachable!("validated behavior {other}"),
        }
    };
    let mut allocation: Vec<(String, usize)> = Vec::new();
    let mut allocated = 0usize;
    for (name, frac) in &config.adversary_mix {
        let count = (frac * malicious as f64).floor() as usize;
        allocated += count;
        allocation.push((name.clone(), count));
    }
    let leftover = malicious.saturating_sub(allocated);
    if leftover > 0 {
        if let Some(entry) = allocation.iter_mut().find(|(n, _)| n == "false_data") {
            entry.1 += leftover;
        } else {
            allocation.push(("false_data".to_owned(), leftover));
        }
    }
    // Adversaries occupy the tail of the index space.
    let mut idx = n - malicious;
    for (name, count) in allocation {
        for k in 0..count {
            if idx < n {
                behaviors[idx] = make(&name, k as u32);
                idx += 1;
            }
        }
    }
    behaviors
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean(sum: f64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        sum / den as f64
    }
}

fn population_variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::run_scenario_full;

    fn small_config() -> SimConfig {
        SimConfig {
            node_count: 20,
            committee_size: 4,
            task_count: 5,
            malicious_fraction: 0.0,
            noise_std: 0.0,
            drift_rate: 0.0,
            window_width_s: 5.0,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn empty_scenario_produces_an_empty_trace() {
        let cfg = SimConfig { task_count: 0, ..small_config() };
        let out = run_scenario_full(&cfg, SchemeVariant::Full).unwrap();
        assert!(out.trace.records.is_empty());
        assert_eq!(out.metrics.completed, 0);
    }

    #[test]
    fn equal_seeds_replay_identical_traces() {
        let cfg = small_config();
        let a = run_scenario_full(&cfg, SchemeVariant::Full).unwrap();
        let b = run_scenario_full(&cfg, SchemeVariant::Full).unwrap();
        assert_eq!(a.trace.content_hash(), b.trace.content_hash());
        assert_eq!(a.ledger.snapshot(), b.ledger.snapshot());

        let c = run_scenario_full(&cfg.clone().with_seed(12), SchemeVariant::Full).unwrap();
        assert_ne!(a.trace.content_hash(), c.trace.content_hash());
    }

    #[test]
    fn honest_noise_free_run_is_fully_accurate() {
        let cfg = small_config();
        let out = run_scenario_full(&cfg, SchemeVariant::Full).unwrap();
        assert_eq!(out.metrics.completed, 5);
        assert_eq!(out.metrics.failed, 0);
        assert_eq!(out.metrics.accuracy, 1.0);
        // Noise-free constant source: every correct flag is true.
        for row in &out.metrics.reputation_traces {
            assert_eq!(row.accuracy, 1.0, "node {} dinged", row.node_id);
        }
        assert!(out.ledger.conserves_tokens());
        assert_eq!(out.trace.early_plaintext_violations(), 0);
    }

    #[test]
    fn horizon_abort_returns_partial_metrics() {
        let cfg = SimConfig { horizon_s: 2.0, task_count: 50, ..small_config() };
        let out = run_scenario_full(&cfg, SchemeVariant::Full).unwrap();
        assert!(out.metrics.aborted);
        assert!(out.metrics.completed < 50);
    }

    #[test]
    fn behavior_assignment_respects_the_mix() {
        let mut cfg = small_config();
        cfg.node_count = 10;
        cfg.malicious_fraction = 0.4;
        cfg.adversary_mix =
            BTreeMap::from([("false_data".to_owned(), 0.5), ("lazy".to_owned(), 0.5)]);
        let behaviors = assign_behaviors(&cfg);
        let false_data =
            behaviors.iter().filter(|b| matches!(b, NodeBehavior::FalseData { .. })).count();
        let lazy = behaviors.iter().filter(|b| matches!(b, NodeBehavior::Lazy { .. })).count();
        assert_eq!(false_data, 2);
        assert_eq!(lazy, 2);
        assert!(behaviors[..6].iter().all(|b| matches!(b, NodeBehavior::Honest)));
    }
}

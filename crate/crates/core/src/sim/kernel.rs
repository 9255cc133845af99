use std::cell::{Cell, RefCell};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll, Waker};

use super::logic::{Logic, LogicValue};
use super::{Edge, SimTime, Trigger};
use crate::error::{Error, Result};

const SETTLE_LIMIT: usize = 1000;
const EDGE_CHAIN_LIMIT: usize = 10_000;

type TaskFuture = Pin<Box<dyn Future<Output = Result<()>>>>;
type ProcessFn = Box<dyn FnMut(&mut Bus<'_>) -> Result<()>>;

/// Ordinal assigned to a task at registration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskId(pub u64);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Handle to a signal owned by one [`Sim`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignalId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockReason {
    Edge(SignalId, Edge),
    Timer(SimTime),
    Other(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TaskState {
    Ready,
    Running,
    Blocked(BlockReason),
    Finished,
}

/// One-shot wakeup token for a parked task.
#[derive(Debug, Clone)]
pub struct Wakeup {
    task: TaskId,
    fired: Rc<Cell<bool>>,
}

impl Wakeup {
    pub fn task(&self) -> TaskId {
        self.task
    }

    pub fn has_fired(&self) -> bool {
        self.fired.get()
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct TimerEntry {
    time: SimTime,
    seq: u64,
    task: TaskId,
}

struct SignalState {
    name: String,
    value: LogicValue,
    rise_waiters: Vec<Wakeup>,
    fall_waiters: Vec<Wakeup>,
    has_edge_procs: bool,
}

struct EdgeProcess {
    signal: SignalId,
    edge: Edge,
    body: Option<ProcessFn>,
}

struct CombProcess {
    inputs: Vec<SignalId>,
    needs_eval: bool,
    body: Option<ProcessFn>,
}

struct State {
    now: SimTime,
    signals: Vec<SignalState>,
    names: HashMap<String, SignalId>,
    ready: VecDeque<TaskId>,
    timers: BinaryHeap<Reverse<TimerEntry>>,
    timer_fired: HashMap<u64, Rc<Cell<bool>>>,
    timer_seq: u64,
    current: Option<TaskId>,
    task_state: Vec<TaskState>,
    stop: bool,
    trace: Option<Vec<(SimTime, TaskId)>>,
    dirty: Vec<bool>,
    any_dirty: bool,
    pending_edges: VecDeque<(SignalId, Edge)>,
    edge_procs: Vec<EdgeProcess>,
    comb_procs: Vec<CombProcess>,
}

struct TaskSlot {
    name: String,
    future: Option<TaskFuture>,
}

struct Inner {
    state: RefCell<State>,
    tasks: RefCell<Vec<TaskSlot>>,
}

/// Deterministic single-executor clocked simulation kernel.
///
/// Cheap to clone; every clone refers to the same simulation. Tasks readied by
/// the same event resume in ascending [`TaskId`] order, and all tasks readied
/// at a time step run before simulated time advances.
#[derive(Clone)]
pub struct Sim {
    inner: Rc<Inner>,
}

impl Default for Sim {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Sim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let st = self.inner.state.borrow();
        f.debug_struct("Sim")
            .field("now", &st.now)
            .field("signals", &st.signals.len())
            .field("tasks", &st.task_state.len())
            .finish()
    }
}

impl State {
    fn signal(&self, id: SignalId) -> Result<&SignalState> {
        self.signals
            .get(id.0)
            .ok_or_else(|| Error::UnknownSignal(format!("<id {}>", id.0)))
    }

    fn read(&self, id: SignalId) -> Result<LogicValue> {
        Ok(self.signal(id)?.value)
    }

    fn write(&mut self, id: SignalId, value: LogicValue) -> Result<()> {
        let sig = self
            .signals
            .get_mut(id.0)
            .ok_or_else(|| Error::UnknownSignal(format!("<id {}>", id.0)))?;
        if sig.value.width() != value.width() {
            return Err(Error::WidthMismatch {
                signal: sig.name.clone(),
                expected: sig.value.width(),
                actual: value.width(),
            });
        }
        let old = sig.value;
        if old == value {
            return Ok(());
        }
        sig.value = value;
        self.dirty[id.0] = true;
        self.any_dirty = true;

        if value.width() == 1 {
            let edge = match (old.bit(0), value.bit(0)) {
                (Logic::Zero, Logic::One) => Some(Edge::Rising),
                (Logic::One, Logic::Zero) => Some(Edge::Falling),
                _ => None,
            };
            if let Some(edge) = edge {
                let sig = &mut self.signals[id.0];
                let mut woken = match edge {
                    Edge::Rising => std::mem::take(&mut sig.rise_waiters),
                    Edge::Falling => std::mem::take(&mut sig.fall_waiters),
                };
                if sig.has_edge_procs {
                    self.pending_edges.push_back((id, edge));
                }
                woken.sort_by_key(|w| w.task);
                for w in &woken {
                    self.fire(w);
                }
            }
        }
        Ok(())
    }

    fn fire(&mut self, w: &Wakeup) {
        if !w.fired.replace(true) {
            self.task_state[w.task.0 as usize] = TaskState::Ready;
            self.ready.push_back(w.task);
        }
    }

    fn wakeup(&self) -> Result<Wakeup> {
        let task = self.current.ok_or(Error::NotInTask)?;
        Ok(Wakeup {
            task,
            fired: Rc::new(Cell::new(false)),
        })
    }

    /// Runs edge processes for every edge produced so far, including edges their writes cause.
    fn drain_edges(&mut self) -> Result<()> {
        let mut steps = 0;
        while let Some((signal, edge)) = self.pending_edges.pop_front() {
            steps += 1;
            if steps > EDGE_CHAIN_LIMIT {
                return Err(Error::CombLoop(EDGE_CHAIN_LIMIT));
            }
            for i in 0..self.edge_procs.len() {
                let p = &self.edge_procs[i];
                if p.signal != signal || p.edge != edge {
                    continue;
                }
                let Some(mut body) = self.edge_procs[i].body.take() else {
                    continue;
                };
                let res = body(&mut Bus { state: self });
                self.edge_procs[i].body = Some(body);
                res?;
            }
        }
        Ok(())
    }

    fn settle(&mut self) -> Result<()> {
        for _ in 0..SETTLE_LIMIT {
            let mut run = Vec::new();
            for (i, p) in self.comb_procs.iter_mut().enumerate() {
                if p.needs_eval || (self.any_dirty && p.inputs.iter().any(|s| self.dirty[s.0])) {
                    p.needs_eval = false;
                    run.push(i);
                }
            }
            if self.any_dirty {
                self.dirty.iter_mut().for_each(|d| *d = false);
                self.any_dirty = false;
            }
            if run.is_empty() {
                return Ok(());
            }
            for i in run {
                let Some(mut body) = self.comb_procs[i].body.take() else {
                    continue;
                };
                let res = body(&mut Bus { state: self });
                self.comb_procs[i].body = Some(body);
                res?;
            }
            self.drain_edges()?;
        }
        Err(Error::CombLoop(SETTLE_LIMIT))
    }

    /// Moves every timer due at or before `time` to the ready queue.
    fn release_timers(&mut self, time: SimTime) -> bool {
        let mut due = Vec::new();
        while let Some(Reverse(top)) = self.timers.peek() {
            if top.time > time {
                break;
            }
            let Reverse(e) = self.timers.pop().expect("peeked");
            due.push(e);
        }
        due.sort_by_key(|e| e.task);
        let any = !due.is_empty();
        for e in due {
            if let Some(fired) = self.timer_fired.remove(&e.seq) {
                self.fire(&Wakeup { task: e.task, fired });
            }
        }
        any
    }
}

/// Signal access handed to DUT processes.
pub struct Bus<'a> {
    state: &'a mut State,
}

macro_rules! signal_access {
    ($($m:ident)?) => {
        pub fn read_u64(&self, id: SignalId) -> Result<u64> {
            self.read(id)?.to_u64()
        }

        pub fn read_i64(&self, id: SignalId) -> Result<i64> {
            Ok(self.read(id)?.to_i128()? as i64)
        }

        /// Reads a 64-bit signal carrying IEEE-754 bits.
        pub fn read_real(&self, id: SignalId) -> Result<f64> {
            Ok(f64::from_bits(self.read_u64(id)?))
        }

        pub fn write_u64(&$($m)? self, id: SignalId, value: u64) -> Result<()> {
            let width = self.read(id)?.width();
            self.write(id, LogicValue::from_u64(width, value)?)
        }

        pub fn write_i64(&$($m)? self, id: SignalId, value: i64) -> Result<()> {
            let width = self.read(id)?.width();
            self.write(id, LogicValue::from_i64(width, value)?)
        }

        pub fn write_real(&$($m)? self, id: SignalId, value: f64) -> Result<()> {
            self.write_u64(id, value.to_bits())
        }
    };
}

impl Bus<'_> {
    pub fn now(&self) -> SimTime {
        self.state.now
    }

    pub fn read(&self, id: SignalId) -> Result<LogicValue> {
        self.state.read(id)
    }

    pub fn write(&mut self, id: SignalId, value: LogicValue) -> Result<()> {
        self.state.write(id, value)
    }

    signal_access!(mut);
}

impl Sim {
    pub fn new() -> Self {
        Self {
            inner: Rc::new(Inner {
                state: RefCell::new(State {
                    now: 0,
                    signals: Vec::new(),
                    names: HashMap::new(),
                    ready: VecDeque::new(),
                    timers: BinaryHeap::new(),
                    timer_fired: HashMap::new(),
                    timer_seq: 0,
                    current: None,
                    task_state: Vec::new(),
                    stop: false,
                    trace: None,
                    dirty: Vec::new(),
                    any_dirty: false,
                    pending_edges: VecDeque::new(),
                    edge_procs: Vec::new(),
                    comb_procs: Vec::new(),
                }),
                tasks: RefCell::new(Vec::new()),
            }),
        }
    }

    pub fn now(&self) -> SimTime {
        self.inner.state.borrow().now
    }

    /// Declares a signal; its value starts as all X.
    pub fn add_signal(&self, name: &str, width: u32) -> Result<SignalId> {
        let value = LogicValue::x(width)?;
        let mut st = self.inner.state.borrow_mut();
        if st.names.contains_key(name) {
            return Err(Error::DuplicateSignal(name.to_string()));
        }
        let id = SignalId(st.signals.len());
        st.signals.push(SignalState {
            name: name.to_string(),
            value,
            rise_waiters: Vec::new(),
            fall_waiters: Vec::new(),
            has_edge_procs: false,
        });
        st.dirty.push(false);
        st.names.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn signal(&self, name: &str) -> Result<SignalId> {
        self.inner
            .state
            .borrow()
            .names
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownSignal(name.to_string()))
    }

    pub fn signal_name(&self, id: SignalId) -> Result<String> {
        Ok(self.inner.state.borrow().signal(id)?.name.clone())
    }

    pub fn signal_width(&self, id: SignalId) -> Result<u32> {
        Ok(self.read(id)?.width())
    }

    pub fn read(&self, id: SignalId) -> Result<LogicValue> {
        self.inner.state.borrow().read(id)
    }

    /// Writes are visible to every subsequent read immediately.
    pub fn write(&self, id: SignalId, value: LogicValue) -> Result<()> {
        let mut st = self.inner.state.borrow_mut();
        st.write(id, value)?;
        st.drain_edges()
    }

    signal_access!();

    /// Registers a process run synchronously whenever `signal` has `edge`,
    /// before any task waiting on that edge resumes.
    pub fn add_edge_process<F>(&self, signal: SignalId, edge: Edge, body: F) -> Result<()>
    where
        F: FnMut(&mut Bus<'_>) -> Result<()> + 'static,
    {
        let mut st = self.inner.state.borrow_mut();
        if st.signal(signal)?.value.width() != 1 {
            return Err(Error::Config(format!(
                "edge process on multi-bit signal `{}`",
                st.signals[signal.0].name
            )));
        }
        st.signals[signal.0].has_edge_procs = true;
        st.edge_procs.push(EdgeProcess {
            signal,
            edge,
            body: Some(Box::new(body)),
        });
        Ok(())
    }

    /// Registers combinational logic re-evaluated at the end of every delta
    /// cycle in which one of `inputs` changed (and once initially).
    pub fn add_comb_process<F>(&self, inputs: &[SignalId], body: F) -> Result<()>
    where
        F: FnMut(&mut Bus<'_>) -> Result<()> + 'static,
    {
        let mut st = self.inner.state.borrow_mut();
        for &s in inputs {
            st.signal(s)?;
        }
        st.comb_procs.push(CombProcess {
            inputs: inputs.to_vec(),
            needs_eval: true,
            body: Some(Box::new(body)),
        });
        Ok(())
    }

    pub fn spawn<F>(&self, body: F) -> TaskId
    where
        F: Future<Output = Result<()>> + 'static,
    {
        let n = self.inner.tasks.borrow().len();
        self.spawn_named(format!("task{n}"), body)
    }

    /// Registers a task; it becomes runnable in the current delta cycle.
    pub fn spawn_named<F>(&self, name: impl Into<String>, body: F) -> TaskId
    where
        F: Future<Output = Result<()>> + 'static,
    {
        let mut tasks = self.inner.tasks.borrow_mut();
        let id = TaskId(tasks.len() as u64);
        tasks.push(TaskSlot {
            name: name.into(),
            future: Some(Box::pin(body)),
        });
        let mut st = self.inner.state.borrow_mut();
        st.task_state.push(TaskState::Ready);
        st.ready.push_back(id);
        id
    }

    /// Drives `signal` low now and toggles it every `period / 2` ticks.
    pub fn start_clock(&self, signal: SignalId, period: SimTime) -> Result<TaskId> {
        if period < 2 || !period.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "clock period must be even and >= 2, got {period}"
            )));
        }
        if self.signal_width(signal)? != 1 {
            return Err(Error::Config("clock signal must be 1 bit wide".into()));
        }
        self.write_u64(signal, 0)?;
        let half = period / 2;
        let sim = self.clone();
        let name = format!("clock({})", self.signal_name(signal)?);
        Ok(self.spawn_named(name, async move {
            loop {
                sim.timer(half).await?;
                sim.write_u64(signal, 1)?;
                sim.timer(half).await?;
                sim.write_u64(signal, 0)?;
            }
        }))
    }

    /// Suspends the calling task until `trigger` fires.
    pub async fn wait(&self, trigger: Trigger) -> Result<()> {
        match trigger {
            Trigger::RisingEdge(s) => self.rising_edge(s).await,
            Trigger::FallingEdge(s) => self.falling_edge(s).await,
            Trigger::ClockCycles(s, n) => self.clock_cycles(s, n).await,
            Trigger::Timer(d) => self.timer(d).await,
        }
    }

    pub fn rising_edge(&self, signal: SignalId) -> Wait {
        Wait::new(self, WaitKind::Edge(signal, Edge::Rising))
    }

    pub fn falling_edge(&self, signal: SignalId) -> Wait {
        Wait::new(self, WaitKind::Edge(signal, Edge::Falling))
    }

    /// Resumes after exactly `n` rising edges of `signal`.
    pub async fn clock_cycles(&self, signal: SignalId, n: u32) -> Result<()> {
        if n == 0 {
            return Err(Error::Config("clock_cycles count must be positive".into()));
        }
        for _ in 0..n {
            self.rising_edge(signal).await?;
        }
        Ok(())
    }

    /// `timer(0)` resumes in a later delta cycle of the current time step.
    pub fn timer(&self, delay: SimTime) -> Wait {
        Wait::new(self, WaitKind::Timer(delay))
    }

    /// Creates a wakeup token for the calling task, for use with [`Sim::park`].
    pub fn wakeup(&self) -> Result<Wakeup> {
        self.inner.state.borrow().wakeup()
    }

    /// Readies the task owning `wakeup` unless it has already been woken.
    pub fn notify(&self, wakeup: &Wakeup) {
        self.inner.state.borrow_mut().fire(wakeup);
    }

    /// Suspends the calling task until `wakeup` is notified.
    pub fn park(&self, wakeup: Wakeup, reason: &'static str) -> Park {
        Park {
            sim: self.clone(),
            wakeup,
            reason,
        }
    }

    pub fn current_task(&self) -> Option<TaskId> {
        self.inner.state.borrow().current
    }

    pub fn task_name(&self, id: TaskId) -> Option<String> {
        self.inner.tasks.borrow().get(id.0 as usize).map(|t| t.name.clone())
    }

    pub fn is_finished(&self, id: TaskId) -> bool {
        matches!(
            self.inner.state.borrow().task_state.get(id.0 as usize),
            Some(TaskState::Finished)
        )
    }

    /// Makes the current (or next) call to [`Sim::run`] return after the running task yields.
    pub fn stop(&self) {
        self.inner.state.borrow_mut().stop = true;
    }

    /// Drops every unfinished task. Their futures often hold clones of this
    /// `Sim`, so this breaks the reference cycle once a run is over.
    pub fn abandon_tasks(&self) {
        let futures: Vec<_> = self
            .inner
            .tasks
            .borrow_mut()
            .iter_mut()
            .filter_map(|t| t.future.take())
            .collect();
        {
            let mut st = self.inner.state.borrow_mut();
            for s in st.task_state.iter_mut() {
                *s = TaskState::Finished;
            }
            st.ready.clear();
            st.timers.clear();
            st.timer_fired.clear();
            for sig in st.signals.iter_mut() {
                sig.rise_waiters.clear();
                sig.fall_waiters.clear();
            }
        }
        drop(futures);
    }

    /// Records every task resumption as `(time, task)`.
    pub fn enable_trace(&self) {
        self.inner.state.borrow_mut().trace = Some(Vec::new());
    }

    pub fn trace(&self) -> Vec<(SimTime, TaskId)> {
        self.inner.state.borrow().trace.clone().unwrap_or_default()
    }

    /// Executes delta cycles and advances time until every task has finished,
    /// [`Sim::stop`] is called, or `until` is reached. Returns the final time.
    pub fn run(&self, until: Option<SimTime>) -> Result<SimTime> {
        if self.inner.tasks.borrow().is_empty() {
            return Err(Error::NoTasks);
        }
        loop {
            // one time step: delta cycles until nothing is runnable at `now`
            loop {
                loop {
                    let next = self.inner.state.borrow_mut().ready.pop_front();
                    let Some(task) = next else { break };
                    self.poll_task(task)?;
                    let mut st = self.inner.state.borrow_mut();
                    if st.stop {
                        st.stop = false;
                        return Ok(st.now);
                    }
                }
                let mut st = self.inner.state.borrow_mut();
                st.settle()?;
                if !st.ready.is_empty() {
                    continue;
                }
                let now = st.now;
                if !st.release_timers(now) {
                    break;
                }
            }

            let mut st = self.inner.state.borrow_mut();
            let next = st.timers.peek().map(|Reverse(e)| e.time);
            match next {
                None => {
                    if st.task_state.iter().all(|s| *s == TaskState::Finished) {
                        return Ok(st.now);
                    }
                    drop(st);
                    return Err(self.deadlock());
                }
                Some(t) => {
                    if let Some(limit) = until {
                        if t > limit {
                            st.now = st.now.max(limit);
                            return Ok(st.now);
                        }
                    }
                    st.now = t;
                    st.release_timers(t);
                }
            }
        }
    }

    fn deadlock(&self) -> Error {
        let st = self.inner.state.borrow();
        let tasks = self.inner.tasks.borrow();
        let blocked = st
            .task_state
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                let why = match s {
                    TaskState::Finished => return None,
                    TaskState::Blocked(BlockReason::Edge(sig, e)) => {
                        let name = st.signals.get(sig.0).map_or("?", |s| s.name.as_str());
                        format!("{e:?} edge of {name}")
                    }
                    TaskState::Blocked(BlockReason::Timer(t)) => format!("timer until {t}"),
                    TaskState::Blocked(BlockReason::Other(r)) => r.to_string(),
                    TaskState::Ready | TaskState::Running => "not resumable".to_string(),
                };
                Some(format!("{} waiting on {why}", tasks[i].name))
            })
            .collect();
        Error::Deadlock { time: st.now, blocked }
    }

    fn poll_task(&self, task: TaskId) -> Result<()> {
        let idx = task.0 as usize;
        let fut = self.inner.tasks.borrow_mut()[idx].future.take();
        let Some(mut fut) = fut else { return Ok(()) };
        {
            let mut st = self.inner.state.borrow_mut();
            st.current = Some(task);
            st.task_state[idx] = TaskState::Running;
            let now = st.now;
            if let Some(trace) = st.trace.as_mut() {
                trace.push((now, task));
            }
        }
        let mut cx = Context::from_waker(Waker::noop());
        let res = fut.as_mut().poll(&mut cx);
        let mut st = self.inner.state.borrow_mut();
        st.current = None;
        match res {
            Poll::Ready(Ok(())) => {
                st.task_state[idx] = TaskState::Finished;
                Ok(())
            }
            Poll::Ready(Err(e)) => {
                st.task_state[idx] = TaskState::Finished;
                drop(st);
                Err(Error::TaskFailed {
                    task: self.inner.tasks.borrow()[idx].name.clone(),
                    source: Box::new(e),
                })
            }
            Poll::Pending => {
                if st.task_state[idx] == TaskState::Running {
                    st.task_state[idx] = TaskState::Blocked(BlockReason::Other("foreign future"));
                }
                drop(st);
                self.inner.tasks.borrow_mut()[idx].future = Some(fut);
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum WaitKind {
    Edge(SignalId, Edge),
    Timer(SimTime),
}

/// Future returned by the edge and timer triggers.
pub struct Wait {
    sim: Sim,
    kind: WaitKind,
    wakeup: Option<Wakeup>,
}

impl Wait {
    fn new(sim: &Sim, kind: WaitKind) -> Self {
        Self {
            sim: sim.clone(),
            kind,
            wakeup: None,
        }
    }
}

impl Future for Wait {
    type Output = Result<()>;

    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<Result<()>> {
        if let Some(w) = &self.wakeup {
            return if w.has_fired() {
                Poll::Ready(Ok(()))
            } else {
                Poll::Pending
            };
        }
        let sim = self.sim.clone();
        let mut st = sim.inner.state.borrow_mut();
        let w = match st.wakeup() {
            Ok(w) => w,
            Err(e) => return Poll::Ready(Err(e)),
        };
        let idx = w.task.0 as usize;
        match self.kind {
            WaitKind::Edge(signal, edge) => {
                let Some(sig) = st.signals.get_mut(signal.0) else {
                    return Poll::Ready(Err(Error::UnknownSignal(format!("<id {}>", signal.0))));
                };
                if sig.value.width() != 1 {
                    return Poll::Ready(Err(Error::Config(format!(
                        "edge trigger on multi-bit signal `{}`",
                        sig.name
                    ))));
                }
                match edge {
                    Edge::Rising => sig.rise_waiters.push(w.clone()),
                    Edge::Falling => sig.fall_waiters.push(w.clone()),
                }
                st.task_state[idx] = TaskState::Blocked(BlockReason::Edge(signal, edge));
            }
            WaitKind::Timer(delay) => {
                let time = st.now + delay;
                let seq = st.timer_seq;
                st.timer_seq += 1;
                st.timers.push(Reverse(TimerEntry {
                    time,
                    seq,
                    task: w.task,
                }));
                st.timer_fired.insert(seq, w.fired.clone());
                st.task_state[idx] = TaskState::Blocked(BlockReason::Timer(time));
            }
        }
        drop(st);
        self.wakeup = Some(w);
        Poll::Pending
    }
}

/// Future returned by [`Sim::park`].
pub struct Park {
    sim: Sim,
    wakeup: Wakeup,
    reason: &'static str,
}

impl Future for Park {
    type Output = Result<()>;

    fn poll(self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<Result<()>> {
        if self.wakeup.has_fired() {
            return Poll::Ready(Ok(()));
        }
        let mut st = self.sim.inner.state.borrow_mut();
        match st.current {
            Some(t) if t == self.wakeup.task => {
                st.task_state[t.0 as usize] = TaskState::Blocked(BlockReason::Other(self.reason));
                Poll::Pending
            }
            _ => Poll::Ready(Err(Error::NotInTask)),
        }
    }
}

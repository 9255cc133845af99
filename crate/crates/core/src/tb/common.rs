//! Design-independent testbench pieces: monitor samples, the BFM with its
//! queues and accessor table, and the driver, monitor, scoreboard and
//! environment components.

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::fcov::{Covergroup, ValueSource};
use crate::sim::{LogicValue, SignalId, Sim, DEFAULT_CLK_PERIOD};
use crate::tlm::{AnalysisPort, BoundedQueue, GetPort, Sequence, Sequencer, TlmAnalysisFifo};
use crate::uvm::{Component, Level, PhaseCtx, Reporter, RunTask};

/// Name of the strobe signal marking cycles that carry a real transaction.
pub const VALID: &str = "tb_valid";

/// Named values captured by a monitor at one falling edge; `None` marks X/Z.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sample {
    pub values: Vec<(&'static str, Option<i128>)>,
}

impl Sample {
    pub fn get(&self, name: &str) -> Option<i128> {
        self.values.iter().find(|(n, _)| *n == name).and_then(|(_, v)| *v)
    }

    /// Value of `name`, or an error if it is absent or unknown.
    pub fn require(&self, name: &str) -> Result<i128> {
        self.get(name).ok_or_else(|| Error::MissingSample(name.to_string()))
    }

    pub fn is_valid(&self) -> bool {
        self.get(VALID) == Some(1)
    }
}

impl ValueSource for Sample {
    fn value(&self, name: &str) -> Option<i128> {
        self.get(name)
    }
}

impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (n, v)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match v {
                Some(v) => write!(f, "{n}={v}")?,
                None => write!(f, "{n}=X")?,
            }
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    Unsigned,
    /// Two's complement, sign-extended.
    Signed,
    /// A 64-bit signal holding f64 volts, reported in millivolts (rounded).
    MilliVolts,
}

/// One signal read by a monitor.
#[derive(Debug, Clone, Copy)]
pub struct Probe {
    pub name: &'static str,
    pub signal: SignalId,
    pub kind: ProbeKind,
}

impl Probe {
    pub fn unsigned(name: &'static str, signal: SignalId) -> Self {
        Self {
            name,
            signal,
            kind: ProbeKind::Unsigned,
        }
    }

    pub fn signed(name: &'static str, signal: SignalId) -> Self {
        Self {
            name,
            signal,
            kind: ProbeKind::Signed,
        }
    }

    pub fn millivolts(name: &'static str, signal: SignalId) -> Self {
        Self {
            name,
            signal,
            kind: ProbeKind::MilliVolts,
        }
    }

    fn read(&self, sim: &Sim) -> Result<Option<i128>> {
        let v: LogicValue = sim.read(self.signal)?;
        if !v.is_known() {
            return Ok(None);
        }
        Ok(Some(match self.kind {
            ProbeKind::Unsigned => v.to_u128()? as i128,
            ProbeKind::Signed => v.to_i128()?,
            ProbeKind::MilliVolts => (f64::from_bits(v.to_u64()?) * 1000.0).round() as i128,
        }))
    }
}

pub fn capture(sim: &Sim, probes: &[Probe]) -> Result<Sample> {
    let mut values = Vec::with_capacity(probes.len());
    for p in probes {
        values.push((p.name, p.read(sim)?));
    }
    Ok(Sample { values })
}

/// Design-specific pin wiggling for one rising edge; `None` means idle.
#[allow(async_fn_in_trait)]
pub trait PinDriver<I>: 'static {
    async fn drive(&mut self, sim: &Sim, item: Option<I>) -> Result<()>;
}

/// Bus functional model: clock, a one-deep driver queue and two unbounded
/// monitor queues filled on every falling edge.
pub struct Bfm<I> {
    pub sim: Sim,
    pub clk: SignalId,
    pub valid: SignalId,
    pub driver_queue: BoundedQueue<I>,
    pub inp_mon_queue: BoundedQueue<Sample>,
    pub out_mon_queue: BoundedQueue<Sample>,
    inp_probes: Vec<Probe>,
    out_probes: Vec<Probe>,
}

impl<I: 'static> Bfm<I> {
    /// Adds `clk` and the validity strobe and starts the clock.
    pub fn new(sim: &Sim) -> Result<Self> {
        let clk = sim.add_signal("clk", 1)?;
        let valid = sim.add_signal(VALID, 1)?;
        sim.write_u64(valid, 0)?;
        sim.start_clock(clk, DEFAULT_CLK_PERIOD)?;
        Ok(Self {
            sim: sim.clone(),
            clk,
            valid,
            driver_queue: BoundedQueue::new(sim, 1),
            inp_mon_queue: BoundedQueue::unbounded(sim),
            out_mon_queue: BoundedQueue::unbounded(sim),
            inp_probes: Vec::new(),
            out_probes: Vec::new(),
        })
    }

    /// Signals captured by the input and output monitors. The validity
    /// strobe is always appended to both.
    pub fn set_probes(&mut self, mut inp: Vec<Probe>, mut out: Vec<Probe>) {
        inp.push(Probe::unsigned(VALID, self.valid));
        out.push(Probe::unsigned(VALID, self.valid));
        self.inp_probes = inp;
        self.out_probes = out;
    }

    /// Queue behind a monitor accessor name.
    pub fn accessor(&self, name: &str) -> Result<BoundedQueue<Sample>> {
        match name {
            "get_inp" => Ok(self.inp_mon_queue.clone()),
            "get_out" => Ok(self.out_mon_queue.clone()),
            _ => Err(Error::Config(format!(
                "BFM has no accessor `{name}` (available: get_inp, get_out)"
            ))),
        }
    }

    /// Blocks while the driver queue is full.
    pub async fn send(&self, item: I) -> Result<()> {
        self.driver_queue.put(item).await
    }

    /// Spawns the driver coroutine and both monitor coroutines.
    pub fn start(&self, mut pins: impl PinDriver<I>) {
        let (sim, clk, valid, q) = (self.sim.clone(), self.clk, self.valid, self.driver_queue.clone());
        self.sim.spawn_named("bfm.driver", async move {
            loop {
                sim.rising_edge(clk).await?;
                let item = q.try_get();
                sim.write_u64(valid, item.is_some() as u64)?;
                pins.drive(&sim, item).await?;
            }
        });
        for (name, probes, queue) in [
            ("bfm.inp_mon", self.inp_probes.clone(), self.inp_mon_queue.clone()),
            ("bfm.out_mon", self.out_probes.clone(), self.out_mon_queue.clone()),
        ] {
            let sim = self.sim.clone();
            self.sim.spawn_named(name, async move {
                loop {
                    sim.falling_edge(clk).await?;
                    let tuple = capture(&sim, &probes)?;
                    // unbounded
                    let _ = queue.try_put(tuple);
                }
            });
        }
    }
}

/// Pulls items from the sequencer and hands them to the BFM.
pub struct Driver<I> {
    bfm: Option<Rc<Bfm<I>>>,
    seqr: Option<Sequencer<I>>,
}

impl<I> Default for Driver<I> {
    fn default() -> Self {
        Self { bfm: None, seqr: None }
    }
}

impl<I: 'static> Component for Driver<I> {
    fn connect(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        self.bfm = Some(ctx.config_get("", "BFM")?);
        self.seqr = Some(ctx.config_get("", "SEQR")?);
        Ok(())
    }

    fn run(&mut self, _ctx: &mut PhaseCtx<'_>) -> Result<Option<RunTask>> {
        let (Some(bfm), Some(seqr)) = (self.bfm.clone(), self.seqr.clone()) else {
            return Err(Error::Unconnected("driver".into()));
        };
        Ok(Some(Box::pin(async move {
            loop {
                let item = seqr.get_next_item().await?;
                bfm.send(item).await?;
                seqr.item_done()?;
            }
        })))
    }
}

/// Forwards tuples from a BFM accessor to its analysis port, sampling its
/// covergroups with every valid tuple.
pub struct Monitor<I> {
    accessor: String,
    queue: Option<BoundedQueue<Sample>>,
    pub ap: Rc<AnalysisPort<Sample>>,
    groups: Rc<RefCell<Vec<Covergroup>>>,
    _item: std::marker::PhantomData<I>,
}

impl<I: 'static> Monitor<I> {
    pub fn new(accessor: &str, groups: Vec<Covergroup>) -> Self {
        Self {
            accessor: accessor.to_string(),
            queue: None,
            ap: Rc::new(AnalysisPort::new("ap")),
            groups: Rc::new(RefCell::new(groups)),
            _item: std::marker::PhantomData,
        }
    }
}

impl<I: 'static> Component for Monitor<I> {
    fn build(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        let bfm: Rc<Bfm<I>> = ctx.config_get("", "BFM")?;
        self.queue = Some(bfm.accessor(&self.accessor)?);
        Ok(())
    }

    fn run(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<Option<RunTask>> {
        let queue = self
            .queue
            .clone()
            .ok_or_else(|| Error::Unconnected(ctx.path().to_string()))?;
        let (ap, groups, rep) = (self.ap.clone(), self.groups.clone(), ctx.reporter());
        Ok(Some(Box::pin(async move {
            loop {
                let datum = queue.get().await?;
                if datum.is_valid() {
                    for g in groups.borrow_mut().iter_mut() {
                        g.sample(&datum)?;
                    }
                }
                if rep.enabled(Level::FIFO_DEBUG) {
                    rep.log(Level::FIFO_DEBUG, &format!("sampled {datum}"));
                }
                ap.write(&datum);
            }
        })))
    }

    fn final_phase(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        for g in self.groups.borrow_mut().drain(..) {
            ctx.uvm().add_coverage(g);
        }
        Ok(())
    }
}

/// Design-specific comparison over the complete monitored traces.
pub trait Checker: 'static {
    /// `outputs[k + latency]` is the response to `inputs[k]`.
    fn check(&mut self, inputs: &[Sample], outputs: &[Sample], rep: &Reporter) -> Result<()>;
}

/// Aligned `(index, input, output)` triples for valid inputs. A valid input
/// without a response is reported as a failure.
pub fn aligned<'a>(
    inputs: &'a [Sample],
    outputs: &'a [Sample],
    latency: usize,
    rep: &Reporter,
) -> Vec<(usize, &'a Sample, &'a Sample)> {
    let mut out = Vec::new();
    for (k, inp) in inputs.iter().enumerate() {
        if !inp.is_valid() {
            continue;
        }
        match outputs.get(k + latency) {
            Some(o) => out.push((k, inp, o)),
            None => rep.fail(&format!("input tuple {k} has no response tuple")),
        }
    }
    out
}

/// Stops reporting individual mismatches after this many.
pub const MAX_REPORTED_MISMATCHES: usize = 10;

/// Collects both monitor streams and runs the checker in the check phase.
pub struct Scoreboard {
    checker: Box<dyn Checker>,
    inp_fifo: Option<TlmAnalysisFifo<Sample>>,
    out_fifo: Option<TlmAnalysisFifo<Sample>>,
    inp_get_port: GetPort<Sample>,
    out_get_port: GetPort<Sample>,
}

impl Scoreboard {
    pub fn new(checker: Box<dyn Checker>) -> Self {
        Self {
            checker,
            inp_fifo: None,
            out_fifo: None,
            inp_get_port: GetPort::new("inp_get_port"),
            out_get_port: GetPort::new("out_get_port"),
        }
    }

    pub fn inp_export(&self) -> Result<Rc<dyn crate::tlm::Subscriber<Sample>>> {
        Ok(self
            .inp_fifo
            .as_ref()
            .ok_or_else(|| Error::Unconnected("inp_fifo".into()))?
            .subscriber())
    }

    pub fn out_export(&self) -> Result<Rc<dyn crate::tlm::Subscriber<Sample>>> {
        Ok(self
            .out_fifo
            .as_ref()
            .ok_or_else(|| Error::Unconnected("out_fifo".into()))?
            .subscriber())
    }

    fn drain(port: &GetPort<Sample>) -> Result<Vec<Sample>> {
        let mut v = Vec::new();
        while port.can_get()? {
            if let Some(s) = port.try_get()? {
                v.push(s);
            }
        }
        Ok(v)
    }
}

impl Component for Scoreboard {
    fn build(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        self.inp_fifo = Some(TlmAnalysisFifo::new(ctx.sim()));
        self.out_fifo = Some(TlmAnalysisFifo::new(ctx.sim()));
        Ok(())
    }

    fn connect(&mut self, _ctx: &mut PhaseCtx<'_>) -> Result<()> {
        let (Some(i), Some(o)) = (&self.inp_fifo, &self.out_fifo) else {
            return Err(Error::Unconnected("scoreboard fifos".into()));
        };
        self.inp_get_port.connect(i.queue());
        self.out_get_port.connect(o.queue());
        Ok(())
    }

    fn check(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        let inputs = Self::drain(&self.inp_get_port)?;
        let outputs = Self::drain(&self.out_get_port)?;
        let rep = ctx.reporter();
        if inputs.len() != outputs.len() {
            rep.fail(&format!(
                "monitor streams misaligned: {} input tuples, {} output tuples",
                inputs.len(),
                outputs.len()
            ));
            return Ok(());
        }
        self.checker.check(&inputs, &outputs, &rep)?;
        if self.inp_get_port.can_get()? || self.out_get_port.can_get()? {
            rep.fail("scoreboard FIFOs not empty after check");
        }
        Ok(())
    }
}

/// What an environment is made of, per design.
pub struct EnvSpec {
    pub checker: Box<dyn Checker>,
    pub inp_groups: Vec<Covergroup>,
    pub out_groups: Vec<Covergroup>,
}

/// Sequencer, driver, both monitors and the scoreboard.
pub struct Env<I> {
    spec: Option<EnvSpec>,
    _item: std::marker::PhantomData<I>,
}

impl<I: 'static> Env<I> {
    pub fn new(spec: EnvSpec) -> Self {
        Self {
            spec: Some(spec),
            _item: std::marker::PhantomData,
        }
    }
}

impl<I: 'static> Component for Env<I> {
    fn build(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        let spec = self
            .spec
            .take()
            .ok_or_else(|| Error::Config("environment built twice".into()))?;
        let seqr: Sequencer<I> = Sequencer::new(ctx.sim(), &format!("{}.seqr", ctx.path()));
        ctx.uvm().config().borrow_mut().set(None, "*", "SEQR", seqr)?;
        ctx.create::<Driver<I>>("driver")?;
        ctx.create_with("inp_mon", Monitor::<I>::new("get_inp", spec.inp_groups))?;
        ctx.create_with("out_mon", Monitor::<I>::new("get_out", spec.out_groups))?;
        ctx.create_with("scoreboard", Scoreboard::new(spec.checker))
    }

    fn connect(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        let (inp, out) = {
            let sb = ctx.child::<Scoreboard>("scoreboard")?;
            (sb.inp_export()?, sb.out_export()?)
        };
        ctx.child::<Monitor<I>>("inp_mon")?.ap.connect(inp);
        ctx.child::<Monitor<I>>("out_mon")?.ap.connect(out);
        Ok(())
    }
}

/// Run-phase body shared by the tests: hold an objection while `seq` runs,
/// then let `drain_cycles` more clock cycles pass.
pub fn sequence_task<I: 'static, S: Sequence<I> + 'static>(
    ctx: &PhaseCtx<'_>,
    mut seq: S,
    drain_cycles: u32,
) -> Result<RunTask> {
    let rep = ctx.reporter();
    let seqr: Sequencer<I> = ctx.config_get("", "SEQR")?;
    let bfm: Rc<Bfm<I>> = ctx.config_get("", "BFM")?;
    Ok(Box::pin(async move {
        rep.raise_objection();
        seqr.start(&mut seq).await?;
        rep.sim().clock_cycles(bfm.clk, drain_cycles).await?;
        rep.drop_objection()
    }))
}

/// Reports the first few mismatches and a final count.
pub struct MismatchLog {
    count: usize,
    what: &'static str,
}

impl MismatchLog {
    pub fn new(what: &'static str) -> Self {
        Self { count: 0, what }
    }

    pub fn report(&mut self, rep: &Reporter, message: impl FnOnce() -> String) {
        self.count += 1;
        if self.count <= MAX_REPORTED_MISMATCHES {
            rep.fail(&message());
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self, rep: &Reporter) {
        if self.count > MAX_REPORTED_MISMATCHES {
            rep.fail(&format!("{} {} in total", self.count, self.what));
        }
    }
}

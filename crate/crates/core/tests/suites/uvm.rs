//! Property suites for the methodology layer: phase ordering, ConfigDB
//! shadowing, objection-gated termination, FIFO order and the
//! sequencer/driver handshake. Shared by the core test suite and the
//! acceptance runner, which calls [`all`] without the test harness.

use std::cell::RefCell;
use std::rc::Rc;

use proptest::prelude::*;
use verikit::sim::{Sim, SimTime, Trigger};
use verikit::tlm::{AnalysisPort, BoundedQueue, GetPort, Sequence, SequenceCtx, Sequencer, TlmAnalysisFifo};
use verikit::uvm::{glob_match, run_test, Component, ConfigDb, PhaseCtx, RunOptions, RunTask};
use verikit::{Error, Result};

const CASES: u32 = 1000;

fn config() -> ProptestConfig {
    // this file is compiled into more than one test target
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(CASES)
    }
}

// ---------------------------------------------------------------- phases

#[derive(Debug, Clone)]
struct Shape {
    /// Run-phase objection hold time, if the node objects.
    hold: Option<SimTime>,
    children: Vec<Shape>,
}

fn shape_strategy() -> impl Strategy<Value = Shape> {
    let leaf = prop::option::of(0u64..50).prop_map(|hold| Shape { hold, children: vec![] });
    leaf.prop_recursive(3, 24, 3, |inner| {
        (prop::option::of(0u64..50), prop::collection::vec(inner, 0..4))
            .prop_map(|(hold, children)| Shape { hold, children })
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Ev {
    Build(String),
    Connect(String),
    RunResumed(String),
    Check(String, u32),
}

type EvLog = Rc<RefCell<Vec<Ev>>>;

struct Node {
    shape: Shape,
    log: EvLog,
}

impl Component for Node {
    fn build(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        self.log.borrow_mut().push(Ev::Build(ctx.path().to_string()));
        for (i, c) in self.shape.children.iter().enumerate() {
            ctx.create_with(
                &format!("c{i}"),
                Node {
                    shape: c.clone(),
                    log: self.log.clone(),
                },
            )?;
        }
        Ok(())
    }

    fn connect(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        self.log.borrow_mut().push(Ev::Connect(ctx.path().to_string()));
        Ok(())
    }

    fn run(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<Option<RunTask>> {
        let (log, rep, hold) = (self.log.clone(), ctx.reporter(), self.shape.hold);
        if hold.is_some() {
            rep.raise_objection();
        }
        Ok(Some(Box::pin(async move {
            log.borrow_mut().push(Ev::RunResumed(rep.path().to_string()));
            if let Some(h) = hold {
                rep.sim().timer(h).await?;
                rep.drop_objection()?;
            }
            Ok(())
        })))
    }

    fn check(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<()> {
        let outstanding = ctx.uvm().objection_count();
        self.log
            .borrow_mut()
            .push(Ev::Check(ctx.path().to_string(), outstanding));
        Ok(())
    }
}

fn paths(shape: &Shape, path: &str, out: &mut Vec<String>) {
    out.push(path.to_string());
    for (i, c) in shape.children.iter().enumerate() {
        paths(c, &format!("{path}.c{i}"), out);
    }
}

fn max_hold(shape: &Shape) -> Option<SimTime> {
    shape.children.iter().filter_map(max_hold).chain(shape.hold).max()
}

fn position(log: &[Ev], f: impl Fn(&Ev) -> bool) -> usize {
    log.iter().position(f).expect("event recorded")
}

proptest! {
    #![proptest_config(config())]

    fn phase_order(shape in shape_strategy()) {
        let log: EvLog = Rc::default();
        let res = run_test("t", Box::new(Node { shape: shape.clone(), log: log.clone() }), &RunOptions::default());
        prop_assert!(res.passed, "{:?}", res.failures);
        prop_assert_eq!(res.sim_time, max_hold(&shape).unwrap_or(0));

        let log = log.borrow();
        let mut all = Vec::new();
        paths(&shape, "uvm_test_top", &mut all);
        let first_check = position(&log, |e| matches!(e, Ev::Check(..)));
        for p in &all {
            let b = position(&log, |e| *e == Ev::Build(p.clone()));
            let c = position(&log, |e| *e == Ev::Connect(p.clone()));
            let r = position(&log, |e| *e == Ev::RunResumed(p.clone()));
            let k = position(&log, |e| matches!(e, Ev::Check(q, _) if q == p));
            prop_assert!(b < c && c < r && r < k, "{p}: {b} {c} {r} {k}");
            prop_assert!(r < first_check);
            if let Some((parent, _)) = p.rsplit_once('.') {
                let pb = position(&log, |e| *e == Ev::Build(parent.to_string()));
                let pc = position(&log, |e| *e == Ev::Connect(parent.to_string()));
                let pk = position(&log, |e| matches!(e, Ev::Check(q, _) if q == parent));
                prop_assert!(pb < b, "build is top-down");
                prop_assert!(c < pc, "connect is bottom-up");
                prop_assert!(k < pk, "check is bottom-up");
            }
        }
        prop_assert!(log.iter().all(|e| !matches!(e, Ev::Check(_, n) if *n > 0)), "check with objections raised");
    }
}

// ---------------------------------------------------------------- ConfigDB

/// Independent glob oracle via regex.
fn glob_regex(glob: &str) -> regex::Regex {
    let body: Vec<String> = glob.split('*').map(regex::escape).collect();
    regex::Regex::new(&format!("^{}$", body.join(".*"))).unwrap()
}

fn glob_strategy() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "*",
        "uvm_test_top.*",
        "uvm_test_top.env.*",
        "*.drv",
        "*drv*",
        "uvm_test_top.env.agent.drv",
        "uvm_test_top.env",
        "*.mon",
        "uvm_test_top.*.mon",
        "*env*",
        "uvm_test_top",
    ])
    .prop_map(str::to_string)
}

fn path_strategy() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "uvm_test_top",
        "uvm_test_top.env",
        "uvm_test_top.env.agent",
        "uvm_test_top.env.agent.drv",
        "uvm_test_top.env.agent.mon",
        "uvm_test_top.env.scoreboard",
        "uvm_test_top.other.drv",
    ])
    .prop_map(str::to_string)
}

proptest! {
    #![proptest_config(config())]

    fn config_latest_matching_set_wins(
        sets in prop::collection::vec((glob_strategy(), prop::sample::select(vec!["BFM", "SEQR"]), any::<u32>()), 0..12),
        queries in prop::collection::vec((path_strategy(), prop::sample::select(vec!["BFM", "SEQR"])), 1..8),
    ) {
        let mut db = ConfigDb::new();
        for (glob, key, v) in &sets {
            db.set(None, glob, key, *v).unwrap();
        }
        for (path, key) in &queries {
            let expected = sets
                .iter()
                .rev()
                .find(|(g, k, _)| k == key && glob_regex(g).is_match(path))
                .map(|(_, _, v)| *v);
            prop_assert_eq!(glob_match_oracle_agrees(&sets, path), true);
            match (db.get::<u32>(path, "", key), expected) {
                (Ok(v), Some(e)) => prop_assert_eq!(v, e),
                (Err(Error::ConfigLookup { .. }), None) => {}
                (got, want) => prop_assert!(false, "{path}/{key}: got {got:?}, want {want:?}"),
            }
        }
        // a "*" entry is visible from everywhere
        db.set(None, "*", "ALL", 1u8).unwrap();
        for (path, _) in &queries {
            prop_assert_eq!(db.get::<u8>(path, "", "ALL").unwrap(), 1);
        }
    }

    fn config_context_prefixes_glob(ctx in path_strategy(), inst in prop::sample::select(vec!["drv", "mon", "x.y"]), v: u16) {
        let mut db = ConfigDb::new();
        db.set(Some(&ctx), "*", "k", v).unwrap();
        prop_assert_eq!(db.get::<u16>(&ctx, inst, "k").unwrap(), v);
        // the context itself is not below `ctx.*`
        prop_assert!(db.get::<u16>(&ctx, "", "k").is_err());
        let wrong_type = db.get::<String>(&ctx, inst, "k");
        prop_assert!(matches!(wrong_type, Err(Error::ConfigType { .. })), "expected a type error");
    }
}

fn glob_match_oracle_agrees(sets: &[(String, &str, u32)], path: &str) -> bool {
    sets.iter()
        .all(|(g, _, _)| glob_match(g, path) == glob_regex(g).is_match(path))
}

// ---------------------------------------------------------------- objections

/// Spawns one task per entry: raise at `start`, drop `hold` later.
struct Objector {
    spans: Vec<(SimTime, SimTime)>,
}

impl Component for Objector {
    fn run(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<Option<RunTask>> {
        let rep = ctx.reporter();
        for &(start, hold) in &self.spans {
            let rep = rep.clone();
            ctx.sim().spawn(async move {
                rep.sim().timer(start).await?;
                rep.raise_objection();
                rep.sim().timer(hold).await?;
                rep.drop_objection()
            });
        }
        Ok(None)
    }
}

proptest! {
    #![proptest_config(config())]

    /// With an objection held from time 0, the run phase ends exactly when
    /// the count first returns to zero. Raises happen at odd times and
    /// drops at even times so no raise ties with a drop.
    fn run_ends_when_objections_drop(k in 1u64..100, others in prop::collection::vec((0u64..100, 0u64..100), 0..6)) {
        let hold0 = 2 * k;
        let mut spans = vec![(0, hold0)];
        spans.extend(others.iter().map(|&(a, b)| (2 * a + 1, 2 * b + 1)));
        let mut end = hold0;
        while let Some(e) = spans
            .iter()
            .filter(|&&(s, h)| s < end && s + h > end)
            .map(|&(s, h)| s + h)
            .max()
        {
            end = e;
        }
        let res = run_test("t", Box::new(Objector { spans: spans.clone() }), &RunOptions::default());
        prop_assert!(res.passed, "{:?}", res.failures);
        prop_assert_eq!(res.sim_time, end, "{:?}", spans);
    }

    fn unbalanced_objection_hits_watchdog(hold in 1u64..500) {
        struct Stuck(SimTime);
        impl Component for Stuck {
            fn run(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<Option<RunTask>> {
                let (rep, hold) = (ctx.reporter(), self.0);
                Ok(Some(Box::pin(async move {
                    rep.raise_objection();
                    rep.raise_objection();
                    rep.sim().timer(hold).await?;
                    rep.drop_objection()
                })))
            }
        }
        let opts = RunOptions { watchdog: 1000, ..RunOptions::default() };
        let res = run_test("t", Box::new(Stuck(hold)), &opts);
        prop_assert!(!res.passed);
        prop_assert!(res.failures[0].contains("watchdog expired"), "{:?}", res.failures);
        prop_assert!(!res.trace.iter().any(|e| e.phase == verikit::uvm::Phase::Check));
    }
}

fn no_objection_ends_at_zero_and_drop_at_zero_fails() {
    let res = run_test("t", Box::new(Objector { spans: vec![] }), &RunOptions::default());
    assert!(res.passed);
    assert_eq!(res.sim_time, 0);

    struct Dropper;
    impl Component for Dropper {
        fn run(&mut self, ctx: &mut PhaseCtx<'_>) -> Result<Option<RunTask>> {
            let rep = ctx.reporter();
            Ok(Some(Box::pin(async move { rep.drop_objection() })))
        }
    }
    let res = run_test("t", Box::new(Dropper), &RunOptions::default());
    assert!(!res.passed);
    assert!(res.failures[0].contains("never raised"), "{:?}", res.failures);
}

// ---------------------------------------------------------------- FIFOs

proptest! {
    #![proptest_config(config())]

    /// Monitor -> analysis port -> analysis FIFO -> get port keeps order and
    /// delivers each item once; a bounded hop in front of the monitor too.
    fn fifo_order_end_to_end(
        gaps in prop::collection::vec(0u64..5, 0..60),
        consumer_delays in prop::collection::vec(0u64..7, 1..8),
        capacity in 1usize..4,
    ) {
        let sim = Sim::new();
        let hop: BoundedQueue<u32> = BoundedQueue::new(&sim, capacity);
        let ap: Rc<AnalysisPort<u32>> = Rc::new(AnalysisPort::new("ap"));
        let fifo = TlmAnalysisFifo::<u32>::new(&sim);
        ap.connect(fifo.subscriber());
        let port = GetPort::<u32>::new("get");
        port.connect(fifo.queue());
        let spy: Rc<RefCell<Vec<u32>>> = Rc::default();
        {
            let spy = spy.clone();
            ap.connect(Rc::new(move |x: &u32| spy.borrow_mut().push(*x)));
        }

        let n = gaps.len() as u32;
        let (s, q, g) = (sim.clone(), hop.clone(), gaps.clone());
        sim.spawn_named("producer", async move {
            for (i, gap) in g.iter().enumerate() {
                s.wait(Trigger::Timer(*gap)).await?;
                q.put(i as u32).await?;
            }
            Ok(())
        });
        let (s, q, ap2) = (sim.clone(), hop.clone(), ap.clone());
        sim.spawn_named("monitor", async move {
            for _ in 0..n {
                let x = q.get().await?;
                s.timer(1).await?;
                ap2.write(&x);
            }
            Ok(())
        });
        let got: Rc<RefCell<Vec<u32>>> = Rc::default();
        let (s, out) = (sim.clone(), got.clone());
        sim.spawn_named("scoreboard", async move {
            for k in 0..n as usize {
                s.timer(consumer_delays[k % consumer_delays.len()]).await?;
                let item = port.get().await?;
                out.borrow_mut().push(item);
            }
            prop_assert_eq_ok(port.try_get()?.is_none())?;
            Ok(())
        });
        sim.run(None).unwrap();
        let expected: Vec<u32> = (0..n).collect();
        prop_assert_eq!(&*got.borrow(), &expected);
        prop_assert_eq!(&*spy.borrow(), &expected);
        prop_assert!(fifo.is_empty() && hop.is_empty());
    }
}

fn prop_assert_eq_ok(cond: bool) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Check("FIFO delivered an extra item".into()))
    }
}

// ---------------------------------------------------------------- sequencer

#[derive(Debug, Clone, Copy)]
enum DriverOp {
    GetNext,
    Done,
}

/// Offers 0, 1, 2, ... forever.
struct Counter;

impl Sequence<u32> for Counter {
    async fn body(&mut self, ctx: &mut SequenceCtx<u32>) -> Result<()> {
        let mut i = 0;
        loop {
            ctx.start_item().await?;
            ctx.finish_item(i).await?;
            i += 1;
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum SeqOp {
    Start,
    Finish,
}

/// Replays a script of sequence-side calls, recording each outcome.
struct Scripted {
    ops: Vec<SeqOp>,
    outcomes: Rc<RefCell<Vec<bool>>>,
}

impl Sequence<u32> for Scripted {
    async fn body(&mut self, ctx: &mut SequenceCtx<u32>) -> Result<()> {
        for (i, op) in self.ops.iter().enumerate() {
            let r = match op {
                SeqOp::Start => ctx.start_item().await,
                SeqOp::Finish => ctx.finish_item(i as u32).await,
            };
            if let Err(e) = &r {
                assert!(matches!(e, Error::Protocol(_)), "{e}");
            }
            self.outcomes.borrow_mut().push(r.is_ok());
        }
        Ok(())
    }
}

/// Outcome of one scripted driver call: the item fetched, or a protocol error.
type Step = std::result::Result<Option<u32>, ()>;

proptest! {
    #![proptest_config(config())]

    fn driver_protocol_errors(script in prop::collection::vec(prop::sample::select(vec![DriverOp::GetNext, DriverOp::Done]), 0..40)) {
        let sim = Sim::new();
        let seqr = Sequencer::<u32>::new(&sim, "seqr");
        let s2 = seqr.clone();
        sim.spawn_named("seq", async move { s2.start(&mut Counter).await });
        let results: Rc<RefCell<Vec<Step>>> = Rc::default();
        let (s, out, sc) = (sim.clone(), results.clone(), script.clone());
        sim.spawn_named("driver", async move {
            for op in sc {
                let r = match op {
                    DriverOp::GetNext => seqr.get_next_item().await.map(Some),
                    DriverOp::Done => seqr.item_done().map(|_| None),
                };
                out.borrow_mut().push(r.map_err(|e| assert!(matches!(e, Error::Protocol(_)))));
            }
            s.stop();
            Ok(())
        });
        sim.run(None).unwrap();
        sim.abandon_tasks();

        let mut outstanding = false;
        let mut next = 0u32;
        for (op, r) in script.iter().zip(results.borrow().iter()) {
            match op {
                DriverOp::GetNext if outstanding => prop_assert!(r.is_err()),
                DriverOp::GetNext => {
                    prop_assert_eq!(r, &Ok(Some(next)));
                    next += 1;
                    outstanding = true;
                }
                DriverOp::Done if outstanding => {
                    prop_assert_eq!(r, &Ok(None));
                    outstanding = false;
                }
                DriverOp::Done => prop_assert!(r.is_err()),
            }
        }
        prop_assert_eq!(results.borrow().len(), script.len());
    }

    fn sequence_protocol_errors(ops in prop::collection::vec(prop::sample::select(vec![SeqOp::Start, SeqOp::Finish]), 0..40)) {
        let sim = Sim::new();
        let seqr = Sequencer::<u32>::new(&sim, "seqr");
        let delivered: Rc<RefCell<Vec<u32>>> = Rc::default();
        let (s2, d) = (seqr.clone(), delivered.clone());
        sim.spawn_named("driver", async move {
            loop {
                let x = s2.get_next_item().await?;
                d.borrow_mut().push(x);
                s2.item_done()?;
            }
        });
        let outcomes: Rc<RefCell<Vec<bool>>> = Rc::default();
        let (s, o, script) = (sim.clone(), outcomes.clone(), ops.clone());
        sim.spawn_named("seq", async move {
            seqr.start(&mut Scripted { ops: script, outcomes: o }).await?;
            s.stop();
            Ok(())
        });
        sim.run(None).unwrap();
        sim.abandon_tasks();

        let mut granted = false;
        let mut expect_delivered = Vec::new();
        for (i, (op, ok)) in ops.iter().zip(outcomes.borrow().iter()).enumerate() {
            match op {
                SeqOp::Start => {
                    prop_assert_eq!(*ok, !granted);
                    granted = true;
                }
                SeqOp::Finish => {
                    prop_assert_eq!(*ok, granted);
                    if granted {
                        expect_delivered.push(i as u32);
                    }
                    granted = false;
                }
            }
        }
        prop_assert_eq!(outcomes.borrow().len(), ops.len());
        prop_assert_eq!(&*delivered.borrow(), &expect_delivered);
    }
}

/// Every suite, for callers without the test harness.
#[allow(dead_code)]
pub fn all() -> Vec<(&'static str, fn())> {
    vec![
        ("phase_order", phase_order),
        ("config_latest_matching_set_wins", config_latest_matching_set_wins),
        ("config_context_prefixes_glob", config_context_prefixes_glob),
        ("run_ends_when_objections_drop", run_ends_when_objections_drop),
        ("unbalanced_objection_hits_watchdog", unbalanced_objection_hits_watchdog),
        (
            "no_objection_ends_at_zero_and_drop_at_zero_fails",
            no_objection_ends_at_zero_and_drop_at_zero_fails,
        ),
        ("fifo_order_end_to_end", fifo_order_end_to_end),
        ("driver_protocol_errors", driver_protocol_errors),
        ("sequence_protocol_errors", sequence_protocol_errors),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn phase_order() {
        super::phase_order()
    }

    #[test]
    fn config_latest_matching_set_wins() {
        super::config_latest_matching_set_wins()
    }

    #[test]
    fn config_context_prefixes_glob() {
        super::config_context_prefixes_glob()
    }

    #[test]
    fn run_ends_when_objections_drop() {
        super::run_ends_when_objections_drop()
    }

    #[test]
    fn unbalanced_objection_hits_watchdog() {
        super::unbalanced_objection_hits_watchdog()
    }

    #[test]
    fn no_objection_ends_at_zero_and_drop_at_zero_fails() {
        super::no_objection_ends_at_zero_and_drop_at_zero_fails()
    }

    #[test]
    fn fifo_order_end_to_end() {
        super::fifo_order_end_to_end()
    }

    #[test]
    fn driver_protocol_errors() {
        super::driver_protocol_errors()
    }

    #[test]
    fn sequence_protocol_errors() {
        super::sequence_protocol_errors()
    }
}

use std::collections::BTreeMap;
use std::rc::Rc;

use super::component::{Component, Phase, PhaseEvent, Tree, Uvm};
use super::log::Level;
use crate::error::{Error, Result};
use crate::fcov::CoverageDb;
use crate::sim::{Sim, SimTime};

/// Simulated-time budget for the run phase.
pub const DEFAULT_WATCHDOG_NS: SimTime = 1_000_000_000;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    /// Overrides each test's default transaction count.
    pub transactions: Option<u64>,
    pub log_level: Level,
    /// Print log lines to stderr as they are emitted.
    pub echo: bool,
    pub watchdog: SimTime,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            transactions: None,
            log_level: Level::INFO,
            echo: false,
            watchdog: DEFAULT_WATCHDOG_NS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestResult {
    pub name: String,
    pub seed: u64,
    pub passed: bool,
    pub failures: Vec<String>,
    pub log: Vec<String>,
    pub coverage: CoverageDb,
    pub trace: Vec<PhaseEvent>,
    /// Simulated time when the run phase ended.
    pub sim_time: SimTime,
    pub transactions: u64,
}

/// Builds the root component of a test.
pub type TestFactory = Rc<dyn Fn() -> Box<dyn Component>>;

/// Tests by name.
#[derive(Default, Clone)]
pub struct TestRegistry {
    tests: BTreeMap<String, TestFactory>,
}

impl TestRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, factory: impl Fn() -> Box<dyn Component> + 'static) -> Result<()> {
        if self.tests.contains_key(name) {
            return Err(Error::DuplicateTest(name.to_string()));
        }
        self.tests.insert(name.to_string(), Rc::new(factory));
        Ok(())
    }

    /// Sorted test names.
    pub fn names(&self) -> Vec<String> {
        self.tests.keys().cloned().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tests.contains_key(name)
    }

    pub fn run(&self, name: &str, opts: &RunOptions) -> Result<TestResult> {
        let factory = self.tests.get(name).ok_or_else(|| Error::UnknownTest {
            name: name.to_string(),
            registered: self.names(),
        })?;
        Ok(run_test(name, factory(), opts))
    }
}

fn build(tree: &mut Tree, id: usize, uvm: &Uvm) -> Result<()> {
    tree.with_component(id, uvm, Phase::Build, |c, ctx| c.build(ctx))?;
    for child in tree.children(id).to_vec() {
        build(tree, child, uvm)?;
    }
    Ok(())
}

fn connect(tree: &mut Tree, id: usize, uvm: &Uvm) -> Result<()> {
    for child in tree.children(id).to_vec() {
        connect(tree, child, uvm)?;
    }
    tree.with_component(id, uvm, Phase::Connect, |c, ctx| c.connect(ctx))
}

fn start_run(tree: &mut Tree, id: usize, uvm: &Uvm) -> Result<()> {
    let task = tree.with_component(id, uvm, Phase::Run, |c, ctx| c.run(ctx))?;
    if let Some(task) = task {
        uvm.sim().spawn_named(tree.path(id).to_string(), task);
    }
    for child in tree.children(id).to_vec() {
        start_run(tree, child, uvm)?;
    }
    Ok(())
}

fn check(tree: &mut Tree, id: usize, uvm: &Uvm) {
    for child in tree.children(id).to_vec() {
        check(tree, child, uvm);
    }
    let path = tree.path(id).to_string();
    if let Err(e) = tree.with_component(id, uvm, Phase::Check, |c, ctx| c.check(ctx)) {
        uvm.fail(&path, &format!("check phase: {e}"));
    }
}

fn final_phase(tree: &mut Tree, id: usize, uvm: &Uvm) {
    let path = tree.path(id).to_string();
    if let Err(e) = tree.with_component(id, uvm, Phase::Final, |c, ctx| c.final_phase(ctx)) {
        uvm.fail(&path, &format!("final phase: {e}"));
    }
    for child in tree.children(id).to_vec() {
        final_phase(tree, child, uvm);
    }
}

/// Runs one test on a fresh kernel: build, connect, run (until the last
/// objection drops), check, final. Every error becomes a recorded failure.
pub fn run_test(name: &str, root: Box<dyn Component>, opts: &RunOptions) -> TestResult {
    let sim = Sim::new();
    let uvm = Uvm::new(sim.clone(), name, opts.seed, opts.transactions, opts.log_level);
    uvm.logger().set_echo(opts.echo);
    let mut tree = Tree::new(root);
    let top = tree.path(0).to_string();

    let elaborated = build(&mut tree, 0, &uvm)
        .map_err(|e| uvm.fail(&top, &format!("build phase: {e}")))
        .and_then(|_| connect(&mut tree, 0, &uvm).map_err(|e| uvm.fail(&top, &format!("connect phase: {e}"))))
        .is_ok();

    let mut run_ok = false;
    if elaborated {
        match start_run(&mut tree, 0, &uvm) {
            Err(e) => uvm.fail(&top, &format!("run phase: {e}")),
            Ok(()) => {
                // ends the phase if nobody objects by the next delta cycle
                let (s, u) = (sim.clone(), uvm.clone());
                sim.spawn_named("objection_guard", async move {
                    s.timer(0).await?;
                    if !u.objection_raised() {
                        s.stop();
                    }
                    Ok(())
                });
                match sim.run(Some(opts.watchdog)) {
                    Err(e) => uvm.fail(&top, &format!("run phase: {e}")),
                    Ok(t) if uvm.objection_count() > 0 => {
                        let e = Error::Watchdog {
                            time: t,
                            outstanding: uvm.objection_count(),
                        };
                        uvm.fail(&top, &e.to_string());
                    }
                    Ok(_) => run_ok = true,
                }
            }
        }
    }
    let sim_time = sim.now();
    sim.abandon_tasks();

    if run_ok {
        check(&mut tree, 0, &uvm);
    }
    if elaborated {
        final_phase(&mut tree, 0, &uvm);
    }

    let failures = uvm.failures();
    let transactions = uvm.executed().or(opts.transactions).unwrap_or(0);
    let mut coverage = CoverageDb::new(name, &opts.seed.to_string(), transactions);
    coverage.groups = uvm.take_coverage();
    TestResult {
        name: name.to_string(),
        seed: opts.seed,
        passed: failures.is_empty(),
        failures,
        log: uvm.logger().take_lines(),
        coverage,
        trace: uvm.trace(),
        sim_time,
        transactions,
    }
}

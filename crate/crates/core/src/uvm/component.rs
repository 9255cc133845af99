use std::any::Any;
use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;

use super::config::{glob_match, ConfigDb};
use super::log::{Level, Logger};
use crate::crv::Rng;
use crate::error::{Error, Result};
use crate::fcov::Covergroup;
use crate::sim::{Sim, SimTime};

/// Body of a component's run phase.
pub type RunTask = Pin<Box<dyn Future<Output = Result<()>>>>;

/// A node of the testbench hierarchy. Every phase method defaults to a no-op.
pub trait Component: Any {
    /// Top-down. Children are created here.
    fn build(&mut self, _ctx: &mut PhaseCtx<'_>) -> Result<()> {
        Ok(())
    }

    /// Bottom-up. Children are fully built and connected.
    fn connect(&mut self, _ctx: &mut PhaseCtx<'_>) -> Result<()> {
        Ok(())
    }

    /// Returns the task to spawn for the run phase, if any.
    fn run(&mut self, _ctx: &mut PhaseCtx<'_>) -> Result<Option<RunTask>> {
        Ok(None)
    }

    /// Bottom-up, after the run phase has ended.
    fn check(&mut self, _ctx: &mut PhaseCtx<'_>) -> Result<()> {
        Ok(())
    }

    /// Top-down; coverage is contributed here.
    fn final_phase(&mut self, _ctx: &mut PhaseCtx<'_>) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Build,
    Connect,
    Run,
    Check,
    Final,
}

/// One phase callback invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseEvent {
    pub phase: Phase,
    pub path: String,
    pub time: SimTime,
}

type Ctor = Rc<dyn Fn() -> Box<dyn Component>>;

/// Short kind name of a component type (`Driver` for `my_tb::Driver<X>`).
pub fn kind_name<T: ?Sized>() -> String {
    let full = std::any::type_name::<T>();
    let base = full.split('<').next().unwrap_or(full);
    base.rsplit("::").next().unwrap_or(base).to_string()
}

/// Constructors by kind name, with name-keyed overrides.
#[derive(Default)]
pub struct Factory {
    ctors: BTreeMap<String, Ctor>,
    type_overrides: HashMap<String, String>,
    inst_overrides: Vec<(String, String)>,
}

impl Factory {
    pub fn register<T: Component + Default>(&mut self) -> String {
        let kind = kind_name::<T>();
        self.ctors
            .entry(kind.clone())
            .or_insert_with(|| Rc::new(|| Box::new(T::default())));
        kind
    }

    pub fn register_kind(&mut self, kind: &str, ctor: impl Fn() -> Box<dyn Component> + 'static) {
        self.ctors.insert(kind.to_string(), Rc::new(ctor));
    }

    pub fn is_registered(&self, kind: &str) -> bool {
        self.ctors.contains_key(kind)
    }

    pub fn kinds(&self) -> Vec<String> {
        self.ctors.keys().cloned().collect()
    }

    /// Every untyped create of `from` builds `to` instead.
    pub fn set_type_override(&mut self, from: &str, to: &str) {
        self.type_overrides.insert(from.to_string(), to.to_string());
    }

    /// Untyped creates at paths matching `glob` build `kind`.
    pub fn set_inst_override(&mut self, glob: &str, kind: &str) {
        self.inst_overrides.push((glob.to_string(), kind.to_string()));
    }

    /// Resolves overrides for an untyped create.
    pub fn resolve(&self, kind: &str, path: &str) -> Result<String> {
        if let Some((_, k)) = self.inst_overrides.iter().rev().find(|(g, _)| glob_match(g, path)) {
            return Ok(k.clone());
        }
        let mut k = kind.to_string();
        for _ in 0..=self.type_overrides.len() {
            match self.type_overrides.get(&k) {
                Some(next) if *next != k => k = next.clone(),
                _ => return Ok(k),
            }
        }
        Err(Error::Factory(format!("type override cycle involving `{kind}`")))
    }

    pub fn construct(&self, kind: &str) -> Result<Box<dyn Component>> {
        let ctor = self
            .ctors
            .get(kind)
            .ok_or_else(|| Error::Factory(format!("unknown component kind `{kind}`")))?;
        Ok(ctor())
    }
}

struct UvmInner {
    sim: Sim,
    test: String,
    seed: u64,
    transactions: Option<u64>,
    executed: Cell<Option<u64>>,
    config: RefCell<ConfigDb>,
    factory: RefCell<Factory>,
    objections: Cell<u32>,
    ever_raised: Cell<bool>,
    logger: Logger,
    failures: RefCell<Vec<String>>,
    coverage: RefCell<Vec<Covergroup>>,
    trace: RefCell<Vec<PhaseEvent>>,
}

/// Per-test shared services: kernel, ConfigDB, factory, objections, log,
/// failures and collected coverage.
#[derive(Clone)]
pub struct Uvm {
    inner: Rc<UvmInner>,
}

impl Uvm {
    pub fn new(sim: Sim, test: &str, seed: u64, transactions: Option<u64>, level: Level) -> Self {
        Self {
            inner: Rc::new(UvmInner {
                sim,
                test: test.to_string(),
                seed,
                transactions,
                executed: Cell::new(None),
                config: RefCell::new(ConfigDb::new()),
                factory: RefCell::new(Factory::default()),
                objections: Cell::new(0),
                ever_raised: Cell::new(false),
                logger: Logger::new(level),
                failures: RefCell::new(Vec::new()),
                coverage: RefCell::new(Vec::new()),
                trace: RefCell::new(Vec::new()),
            }),
        }
    }

    pub fn sim(&self) -> &Sim {
        &self.inner.sim
    }

    pub fn test_name(&self) -> &str {
        &self.inner.test
    }

    pub fn seed(&self) -> u64 {
        self.inner.seed
    }

    /// Requested transaction count, if overridden.
    pub fn transactions(&self) -> Option<u64> {
        self.inner.transactions
    }

    /// Records how many transactions the test actually executed.
    pub fn set_executed(&self, n: u64) {
        self.inner.executed.set(Some(n));
    }

    pub fn executed(&self) -> Option<u64> {
        self.inner.executed.get()
    }

    pub fn config(&self) -> &RefCell<ConfigDb> {
        &self.inner.config
    }

    pub fn factory(&self) -> &RefCell<Factory> {
        &self.inner.factory
    }

    pub fn logger(&self) -> &Logger {
        &self.inner.logger
    }

    /// Independent random stream keyed by the test seed and `stream`.
    pub fn rng(&self, stream: &str) -> Rng {
        Rng::for_stream(self.inner.seed, stream)
    }

    pub fn log(&self, level: Level, path: &str, message: &str) {
        self.inner.logger.log(self.inner.sim.now(), level, path, message);
    }

    pub fn fail(&self, path: &str, message: &str) {
        self.log(Level::ERROR, path, message);
        self.inner.failures.borrow_mut().push(format!("{path}: {message}"));
    }

    pub fn failures(&self) -> Vec<String> {
        self.inner.failures.borrow().clone()
    }

    pub fn objection_count(&self) -> u32 {
        self.inner.objections.get()
    }

    pub fn objection_raised(&self) -> bool {
        self.inner.ever_raised.get()
    }

    pub fn raise_objection(&self, path: &str) {
        self.inner.objections.set(self.inner.objections.get() + 1);
        self.inner.ever_raised.set(true);
        self.log(Level::PYUVM_DEBUG, path, "raised objection");
    }

    /// Ends the run phase when the count reaches zero.
    pub fn drop_objection(&self, path: &str) -> Result<()> {
        let n = self.inner.objections.get();
        if n == 0 {
            return Err(Error::Objection(format!(
                "{path} dropped an objection that was never raised"
            )));
        }
        self.inner.objections.set(n - 1);
        self.log(Level::PYUVM_DEBUG, path, "dropped objection");
        if n == 1 {
            self.inner.sim.stop();
        }
        Ok(())
    }

    pub fn add_coverage(&self, group: Covergroup) {
        self.inner.coverage.borrow_mut().push(group);
    }

    pub fn take_coverage(&self) -> Vec<Covergroup> {
        std::mem::take(&mut *self.inner.coverage.borrow_mut())
    }

    pub(crate) fn record(&self, phase: Phase, path: &str) {
        self.inner.trace.borrow_mut().push(PhaseEvent {
            phase,
            path: path.to_string(),
            time: self.inner.sim.now(),
        });
    }

    pub fn trace(&self) -> Vec<PhaseEvent> {
        self.inner.trace.borrow().clone()
    }
}

/// Logging, failure and objection handle bound to one component path,
/// cheap to move into run-phase tasks.
#[derive(Clone)]
pub struct Reporter {
    uvm: Uvm,
    path: Rc<str>,
}

impl Reporter {
    pub fn uvm(&self) -> &Uvm {
        &self.uvm
    }

    pub fn sim(&self) -> &Sim {
        self.uvm.sim()
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn log(&self, level: Level, message: &str) {
        self.uvm.log(level, &self.path, message);
    }

    pub fn info(&self, message: &str) {
        self.log(Level::INFO, message);
    }

    pub fn debug(&self, message: &str) {
        self.log(Level::DEBUG, message);
    }

    pub fn enabled(&self, level: Level) -> bool {
        self.uvm.logger().enabled(level)
    }

    pub fn fail(&self, message: &str) {
        self.uvm.fail(&self.path, message);
    }

    pub fn raise_objection(&self) {
        self.uvm.raise_objection(&self.path);
    }

    pub fn drop_objection(&self) -> Result<()> {
        self.uvm.drop_objection(&self.path)
    }
}

struct Node {
    name: String,
    path: String,
    children: Vec<usize>,
    comp: Option<Box<dyn Component>>,
}

/// Arena holding the component hierarchy.
pub struct Tree {
    nodes: Vec<Node>,
}

pub const ROOT_NAME: &str = "uvm_test_top";

impl Tree {
    pub fn new(root: Box<dyn Component>) -> Self {
        Self {
            nodes: vec![Node {
                name: ROOT_NAME.to_string(),
                path: ROOT_NAME.to_string(),
                children: Vec::new(),
                comp: Some(root),
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn path(&self, id: usize) -> &str {
        &self.nodes[id].path
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.nodes[id].children
    }

    /// Every path in pre-order.
    pub fn paths(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit_pre(0, &mut |id| out.push(self.nodes[id].path.clone()));
        out
    }

    fn visit_pre(&self, id: usize, f: &mut dyn FnMut(usize)) {
        f(id);
        for &c in &self.nodes[id].children {
            self.visit_pre(c, f);
        }
    }

    fn add_child(&mut self, parent: usize, name: &str, comp: Box<dyn Component>) -> Result<usize> {
        if name.is_empty() || name.contains('.') {
            return Err(Error::Config(format!("invalid component name `{name}`")));
        }
        let path = format!("{}.{}", self.nodes[parent].path, name);
        if self.nodes[parent].children.iter().any(|&c| self.nodes[c].name == name) {
            return Err(Error::DuplicateComponent(path));
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            name: name.to_string(),
            path,
            children: Vec::new(),
            comp: Some(comp),
        });
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    fn find(&self, from: usize, rel: &str) -> Result<usize> {
        let mut id = from;
        for part in rel.split('.') {
            id = *self.nodes[id]
                .children
                .iter()
                .find(|&&c| self.nodes[c].name == part)
                .ok_or_else(|| Error::Config(format!("no component `{rel}` under `{}`", self.nodes[from].path)))?;
        }
        Ok(id)
    }

    /// Typed access to the component at `id`.
    pub fn get<T: Component>(&self, id: usize) -> Result<&T> {
        let node = &self.nodes[id];
        let comp = node
            .comp
            .as_deref()
            .ok_or_else(|| Error::Config(format!("component `{}` is busy", node.path)))?;
        let any: &dyn Any = comp;
        any.downcast_ref::<T>()
            .ok_or_else(|| Error::Config(format!("component `{}` is not a {}", node.path, kind_name::<T>())))
    }

    pub fn get_mut<T: Component>(&mut self, id: usize) -> Result<&mut T> {
        let node = &mut self.nodes[id];
        let path = node.path.clone();
        let comp = node
            .comp
            .as_deref_mut()
            .ok_or_else(|| Error::Config(format!("component `{path}` is busy")))?;
        let any: &mut dyn Any = comp;
        any.downcast_mut::<T>()
            .ok_or_else(|| Error::Config(format!("component `{path}` is not a {}", kind_name::<T>())))
    }

    /// Typed access by path relative to the root, e.g. `env.scoreboard`.
    pub fn lookup<T: Component>(&self, rel: &str) -> Result<&T> {
        let id = self.find(0, rel)?;
        self.get(id)
    }

    pub(crate) fn with_component<R>(
        &mut self,
        id: usize,
        uvm: &Uvm,
        phase: Phase,
        f: impl FnOnce(&mut dyn Component, &mut PhaseCtx<'_>) -> Result<R>,
    ) -> Result<R> {
        let mut comp = self.nodes[id]
            .comp
            .take()
            .ok_or_else(|| Error::Config(format!("component `{}` is busy", self.nodes[id].path)))?;
        uvm.record(phase, &self.nodes[id].path);
        let result = {
            let mut ctx = PhaseCtx {
                tree: self,
                id,
                uvm,
                phase,
            };
            f(comp.as_mut(), &mut ctx)
        };
        self.nodes[id].comp = Some(comp);
        result
    }
}

/// What a phase callback can reach: its own place in the tree, its
/// children, and the per-test services.
pub struct PhaseCtx<'a> {
    tree: &'a mut Tree,
    id: usize,
    uvm: &'a Uvm,
    phase: Phase,
}

impl PhaseCtx<'_> {
    pub fn path(&self) -> &str {
        &self.tree.nodes[self.id].path
    }

    pub fn name(&self) -> &str {
        &self.tree.nodes[self.id].name
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn uvm(&self) -> &Uvm {
        self.uvm
    }

    pub fn sim(&self) -> &Sim {
        self.uvm.sim()
    }

    pub fn reporter(&self) -> Reporter {
        Reporter {
            uvm: self.uvm.clone(),
            path: Rc::from(self.path()),
        }
    }

    fn ensure_build(&self) -> Result<()> {
        if self.phase != Phase::Build {
            return Err(Error::Factory(format!(
                "`{}` tried to create a component outside the build phase",
                self.path()
            )));
        }
        Ok(())
    }

    /// Adds an already constructed child.
    pub fn create_with<T: Component>(&mut self, name: &str, value: T) -> Result<()> {
        self.ensure_build()?;
        self.tree.add_child(self.id, name, Box::new(value))?;
        Ok(())
    }

    /// Creates a child through the factory, registering `T` on first use.
    pub fn create<T: Component + Default>(&mut self, name: &str) -> Result<()> {
        self.ensure_build()?;
        let kind = self.uvm.factory().borrow_mut().register::<T>();
        let comp = self.uvm.factory().borrow().construct(&kind)?;
        self.tree.add_child(self.id, name, comp)?;
        Ok(())
    }

    /// Creates a child by kind name, honouring factory overrides.
    pub fn create_by_kind(&mut self, kind: &str, name: &str) -> Result<()> {
        self.ensure_build()?;
        let path = format!("{}.{}", self.path(), name);
        let comp = {
            let f = self.uvm.factory().borrow();
            let kind = f.resolve(kind, &path)?;
            f.construct(&kind)?
        };
        self.tree.add_child(self.id, name, comp)?;
        Ok(())
    }

    pub fn child<T: Component>(&self, rel: &str) -> Result<&T> {
        let id = self.tree.find(self.id, rel)?;
        self.tree.get(id)
    }

    pub fn child_mut<T: Component>(&mut self, rel: &str) -> Result<&mut T> {
        let id = self.tree.find(self.id, rel)?;
        self.tree.get_mut(id)
    }

    pub fn child_names(&self) -> Vec<String> {
        self.tree.nodes[self.id]
            .children
            .iter()
            .map(|&c| self.tree.nodes[c].name.clone())
            .collect()
    }

    /// Sets `key` for paths matching `<own path>.glob`.
    pub fn config_set<T: Any>(&self, glob: &str, key: &str, value: T) -> Result<()> {
        self.uvm.config().borrow_mut().set(Some(self.path()), glob, key, value)
    }

    /// Looks up `key` as seen from `<own path>.inst`.
    pub fn config_get<T: Any + Clone>(&self, inst: &str, key: &str) -> Result<T> {
        self.uvm.config().borrow().get(self.path(), inst, key)
    }

    pub fn log(&self, level: Level, message: &str) {
        self.uvm.log(level, self.path(), message);
    }

    pub fn fail(&self, message: &str) {
        self.uvm.fail(self.path(), message);
    }

    /// Random stream unique to this component and `stream`.
    pub fn rng(&self, stream: &str) -> Rng {
        self.uvm.rng(&format!("{}/{stream}", self.path()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Default)]
    struct Leaf;
    impl Component for Leaf {}

    #[derive(Default)]
    struct Other;
    impl Component for Other {}

    #[test]
    fn kind_names() {
        assert_eq!(kind_name::<Leaf>(), "Leaf");
        assert_eq!(kind_name::<Option<Leaf>>(), "Option");
    }

    #[test]
    fn factory_overrides() {
        let mut f = Factory::default();
        f.register::<Leaf>();
        f.register::<Other>();
        assert_eq!(f.resolve("Leaf", "a.b").unwrap(), "Leaf");
        f.set_type_override("Leaf", "Other");
        assert_eq!(f.resolve("Leaf", "a.b").unwrap(), "Other");
        f.set_inst_override("*.special", "Leaf");
        assert_eq!(f.resolve("Leaf", "a.special").unwrap(), "Leaf");
        assert!(f.construct("Missing").is_err());
        f.set_type_override("Other", "Leaf");
        assert!(f.resolve("Leaf", "x").is_err());
    }

    #[test]
    fn tree_paths_and_duplicates() {
        let mut t = Tree::new(Box::new(Leaf));
        let env = t.add_child(0, "env", Box::new(Leaf)).unwrap();
        t.add_child(env, "driver", Box::new(Other)).unwrap();
        assert!(matches!(
            t.add_child(env, "driver", Box::new(Other)),
            Err(Error::DuplicateComponent(p)) if p == "uvm_test_top.env.driver"
        ));
        assert_eq!(
            t.paths(),
            ["uvm_test_top", "uvm_test_top.env", "uvm_test_top.env.driver"]
        );
        assert!(t.lookup::<Other>("env.driver").is_ok());
        assert!(t.lookup::<Leaf>("env.driver").is_err());
        assert!(t.lookup::<Leaf>("env.nope").is_err());
    }

    #[test]
    fn objections() {
        let uvm = Uvm::new(Sim::new(), "t", 0, None, Level::INFO);
        assert!(matches!(uvm.drop_objection("p"), Err(Error::Objection(_))));
        uvm.raise_objection("p");
        uvm.raise_objection("p");
        uvm.drop_objection("p").unwrap();
        assert_eq!(uvm.objection_count(), 1);
        uvm.drop_objection("p").unwrap();
        assert_eq!(uvm.objection_count(), 0);
        assert!(uvm.objection_raised());
    }
}

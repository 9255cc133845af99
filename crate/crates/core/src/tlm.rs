//! Transaction-level communication between tasks: bounded queues, analysis
//! broadcast, get ports and a sequencer handshake.
//!
//! Blocked callers park on the simulation kernel, so all blocking operations
//! must be awaited from inside a simulation task.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::sim::{Sim, Wakeup};

struct QueueState<T> {
    items: VecDeque<T>,
    capacity: usize,
    getters: Vec<Wakeup>,
    putters: Vec<Wakeup>,
}

/// FIFO with an optional capacity; `0` means unbounded.
pub struct BoundedQueue<T> {
    sim: Sim,
    state: Rc<RefCell<QueueState<T>>>,
}

impl<T> Clone for BoundedQueue<T> {
    fn clone(&self) -> Self {
        Self {
            sim: self.sim.clone(),
            state: self.state.clone(),
        }
    }
}

fn wake_all(sim: &Sim, list: &mut Vec<Wakeup>) {
    for w in list.drain(..) {
        sim.notify(&w);
    }
}

impl<T> BoundedQueue<T> {
    pub fn new(sim: &Sim, capacity: usize) -> Self {
        Self {
            sim: sim.clone(),
            state: Rc::new(RefCell::new(QueueState {
                items: VecDeque::new(),
                capacity,
                getters: Vec::new(),
                putters: Vec::new(),
            })),
        }
    }

    pub fn unbounded(sim: &Sim) -> Self {
        Self::new(sim, 0)
    }

    pub fn capacity(&self) -> usize {
        self.state.borrow().capacity
    }

    pub fn len(&self) -> usize {
        self.state.borrow().items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        let st = self.state.borrow();
        st.capacity != 0 && st.items.len() >= st.capacity
    }

    /// Enqueues without blocking; hands the item back if the queue is full.
    pub fn try_put(&self, item: T) -> std::result::Result<(), T> {
        if self.is_full() {
            return Err(item);
        }
        let mut st = self.state.borrow_mut();
        st.items.push_back(item);
        wake_all(&self.sim, &mut st.getters);
        Ok(())
    }

    pub fn try_get(&self) -> Option<T> {
        let mut st = self.state.borrow_mut();
        let item = st.items.pop_front()?;
        wake_all(&self.sim, &mut st.putters);
        Some(item)
    }

    pub async fn put(&self, item: T) -> Result<()> {
        let mut item = item;
        loop {
            match self.try_put(item) {
                Ok(()) => return Ok(()),
                Err(back) => item = back,
            }
            let w = self.sim.wakeup()?;
            self.state.borrow_mut().putters.push(w.clone());
            self.sim.park(w, "queue put").await?;
        }
    }

    pub async fn get(&self) -> Result<T> {
        loop {
            if let Some(item) = self.try_get() {
                return Ok(item);
            }
            let w = self.sim.wakeup()?;
            self.state.borrow_mut().getters.push(w.clone());
            self.sim.park(w, "queue get").await?;
        }
    }

    /// Removes and returns everything currently queued.
    pub fn drain(&self) -> Vec<T> {
        let mut st = self.state.borrow_mut();
        let out: Vec<T> = st.items.drain(..).collect();
        if !out.is_empty() {
            wake_all(&self.sim, &mut st.putters);
        }
        out
    }
}

/// Receiver of broadcast items.
pub trait Subscriber<T> {
    fn write(&self, item: &T);
}

impl<T, F: Fn(&T)> Subscriber<T> for F {
    fn write(&self, item: &T) {
        self(item)
    }
}

/// One-to-many broadcast. Delivery is synchronous, in connection order.
pub struct AnalysisPort<T> {
    name: String,
    subscribers: RefCell<Vec<Rc<dyn Subscriber<T>>>>,
}

impl<T: Clone> AnalysisPort<T> {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            subscribers: RefCell::new(Vec::new()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn connect(&self, sub: Rc<dyn Subscriber<T>>) {
        self.subscribers.borrow_mut().push(sub);
    }

    pub fn subscriber_count(&self) -> usize {
        self.subscribers.borrow().len()
    }

    pub fn write(&self, item: &T) {
        let subs = self.subscribers.borrow().clone();
        for s in subs {
            s.write(item);
        }
    }
}

/// Unbounded FIFO that can subscribe to an [`AnalysisPort`].
pub struct TlmAnalysisFifo<T> {
    queue: BoundedQueue<T>,
}

impl<T> Clone for TlmAnalysisFifo<T> {
    fn clone(&self) -> Self {
        Self {
            queue: self.queue.clone(),
        }
    }
}

impl<T: Clone + 'static> TlmAnalysisFifo<T> {
    pub fn new(sim: &Sim) -> Self {
        Self {
            queue: BoundedQueue::unbounded(sim),
        }
    }

    pub fn queue(&self) -> &BoundedQueue<T> {
        &self.queue
    }

    pub fn subscriber(&self) -> Rc<dyn Subscriber<T>> {
        Rc::new(self.clone())
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

impl<T: Clone> Subscriber<T> for TlmAnalysisFifo<T> {
    fn write(&self, item: &T) {
        // unbounded, cannot be full
        let _ = self.queue.try_put(item.clone());
    }
}

/// Consumer side of a queue, connected during the connect phase.
pub struct GetPort<T> {
    name: String,
    queue: RefCell<Option<BoundedQueue<T>>>,
}

impl<T> GetPort<T> {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            queue: RefCell::new(None),
        }
    }

    pub fn connect(&self, queue: &BoundedQueue<T>) {
        *self.queue.borrow_mut() = Some(queue.clone());
    }

    pub fn is_connected(&self) -> bool {
        self.queue.borrow().is_some()
    }

    fn target(&self) -> Result<BoundedQueue<T>> {
        self.queue
            .borrow()
            .clone()
            .ok_or_else(|| Error::Unconnected(self.name.clone()))
    }

    pub async fn get(&self) -> Result<T> {
        self.target()?.get().await
    }

    pub fn try_get(&self) -> Result<Option<T>> {
        Ok(self.target()?.try_get())
    }

    pub fn can_get(&self) -> Result<bool> {
        Ok(!self.target()?.is_empty())
    }
}

struct SequencerState<T> {
    // tickets waiting for arbitration, head holds the grant
    requests: VecDeque<u64>,
    next_ticket: u64,
    offered: Option<(u64, T)>,
    outstanding: Option<u64>,
    completed: Vec<u64>,
    driver_waiters: Vec<Wakeup>,
    sequence_waiters: Vec<Wakeup>,
}

/// Arbitrates items from running sequences to one driver, first come first served.
pub struct Sequencer<T> {
    sim: Sim,
    name: String,
    state: Rc<RefCell<SequencerState<T>>>,
}

impl<T> Clone for Sequencer<T> {
    fn clone(&self) -> Self {
        Self {
            sim: self.sim.clone(),
            name: self.name.clone(),
            state: self.state.clone(),
        }
    }
}

impl<T> Sequencer<T> {
    pub fn new(sim: &Sim, name: &str) -> Self {
        Self {
            sim: sim.clone(),
            name: name.to_string(),
            state: Rc::new(RefCell::new(SequencerState {
                requests: VecDeque::new(),
                next_ticket: 0,
                offered: None,
                outstanding: None,
                completed: Vec::new(),
                driver_waiters: Vec::new(),
                sequence_waiters: Vec::new(),
            })),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Driver side: blocks until a sequence offers an item.
    pub async fn get_next_item(&self) -> Result<T> {
        loop {
            {
                let mut st = self.state.borrow_mut();
                if st.outstanding.is_some() {
                    return Err(Error::Protocol(format!(
                        "{}: get_next_item called before item_done",
                        self.name
                    )));
                }
                if let Some((ticket, item)) = st.offered.take() {
                    st.outstanding = Some(ticket);
                    return Ok(item);
                }
            }
            let w = self.sim.wakeup()?;
            self.state.borrow_mut().driver_waiters.push(w.clone());
            self.sim.park(w, "get_next_item").await?;
        }
    }

    /// Driver side: completes the item returned by the last `get_next_item`.
    pub fn item_done(&self) -> Result<()> {
        let mut st = self.state.borrow_mut();
        let ticket = st
            .outstanding
            .take()
            .ok_or_else(|| Error::Protocol(format!("{}: item_done with no item outstanding", self.name)))?;
        st.completed.push(ticket);
        wake_all(&self.sim, &mut st.sequence_waiters);
        Ok(())
    }

    pub fn has_pending(&self) -> bool {
        let st = self.state.borrow();
        st.offered.is_some() || st.outstanding.is_some()
    }

    async fn wait_sequence(&self, reason: &'static str) -> Result<()> {
        let w = self.sim.wakeup()?;
        self.state.borrow_mut().sequence_waiters.push(w.clone());
        self.sim.park(w, reason).await
    }

    /// Runs `seq` to completion on this sequencer.
    pub async fn start<S: Sequence<T> + ?Sized>(&self, seq: &mut S) -> Result<()> {
        let mut ctx = SequenceCtx {
            sequencer: self.clone(),
            granted: None,
        };
        let result = seq.body(&mut ctx).await;
        if let Some(t) = ctx.granted.take() {
            self.release(t);
        }
        result
    }

    fn release(&self, ticket: u64) {
        let mut st = self.state.borrow_mut();
        st.requests.retain(|&t| t != ticket);
        wake_all(&self.sim, &mut st.sequence_waiters);
    }
}

/// Handle a running sequence uses to hand items to the driver.
pub struct SequenceCtx<T> {
    sequencer: Sequencer<T>,
    granted: Option<u64>,
}

impl<T> SequenceCtx<T> {
    pub fn sim(&self) -> &Sim {
        &self.sequencer.sim
    }

    /// Waits for arbitration.
    pub async fn start_item(&mut self) -> Result<()> {
        if self.granted.is_some() {
            return Err(Error::Protocol(format!(
                "{}: start_item called twice without finish_item",
                self.sequencer.name
            )));
        }
        let ticket = {
            let mut st = self.sequencer.state.borrow_mut();
            let t = st.next_ticket;
            st.next_ticket += 1;
            st.requests.push_back(t);
            t
        };
        loop {
            let head = self.sequencer.state.borrow().requests.front().copied();
            if head == Some(ticket) {
                self.granted = Some(ticket);
                return Ok(());
            }
            self.sequencer.wait_sequence("start_item").await?;
        }
    }

    /// Offers `item` to the driver and waits until the driver calls `item_done`.
    pub async fn finish_item(&mut self, item: T) -> Result<()> {
        let ticket = self.granted.ok_or_else(|| {
            Error::Protocol(format!(
                "{}: finish_item without a grant from start_item",
                self.sequencer.name
            ))
        })?;
        {
            let mut st = self.sequencer.state.borrow_mut();
            st.offered = Some((ticket, item));
            wake_all(&self.sequencer.sim, &mut st.driver_waiters);
        }
        loop {
            let done = {
                let mut st = self.sequencer.state.borrow_mut();
                match st.completed.iter().position(|&t| t == ticket) {
                    Some(i) => {
                        st.completed.swap_remove(i);
                        true
                    }
                    None => false,
                }
            };
            if done {
                break;
            }
            self.sequencer.wait_sequence("finish_item").await?;
        }
        self.granted = None;
        self.sequencer.release(ticket);
        Ok(())
    }

    /// `start_item` followed by `finish_item`.
    pub async fn send(&mut self, item: T) -> Result<()> {
        self.start_item().await?;
        self.finish_item(item).await
    }
}

/// A stimulus generator body.
#[allow(async_fn_in_trait)]
pub trait Sequence<T> {
    async fn body(&mut self, ctx: &mut SequenceCtx<T>) -> Result<()>;
}

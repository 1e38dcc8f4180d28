use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

/// Numeric type of a state: integer counts in agent mode, expected counts
/// in mean-field mode.
pub trait Count:
    Copy + Default + PartialOrd + Add<Output = Self> + AddAssign + std::fmt::Debug
{
    fn to_f64(self) -> f64;
}

impl Count for u64 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Count for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

/// Open vacancies of one node by age in timesteps. The last bucket
/// collects every vacancy at least `cap` steps old.
#[derive(Debug, Clone, PartialEq)]
pub struct VacancyAges<T> {
    buckets: Vec<T>,
}

impl<T: Count> VacancyAges<T> {
    pub fn new(cap: usize) -> Self {
        VacancyAges {
            buckets: vec![T::default(); cap + 1],
        }
    }

    /// `count` fresh vacancies (age 0).
    pub fn with_fresh(cap: usize, count: T) -> Self {
        let mut v = Self::new(cap);
        v.buckets[0] = count;
        v
    }

    pub fn cap(&self) -> usize {
        self.buckets.len() - 1
    }

    pub fn buckets(&self) -> &[T] {
        &self.buckets
    }

    pub(crate) fn buckets_mut(&mut self) -> &mut [T] {
        &mut self.buckets
    }

    pub fn total(&self) -> T {
        self.buckets.iter().fold(T::default(), |a, &b| a + b)
    }

    /// Vacancies with age of at least `age` steps; `age` must not exceed the cap.
    pub fn at_least(&self, age: usize) -> T {
        assert!(
            age <= self.cap(),
            "age {age} beyond tracked cap {}",
            self.cap()
        );
        self.buckets[age..].iter().fold(T::default(), |a, &b| a + b)
    }

    /// Every vacancy grows one step older.
    pub fn age_one_step(&mut self) {
        let cap = self.cap();
        if cap == 0 {
            return;
        }
        let oldest = self.buckets[cap] + self.buckets[cap - 1];
        for k in (1..cap).rev() {
            self.buckets[k] = self.buckets[k - 1];
        }
        self.buckets[cap] = oldest;
        self.buckets[0] = T::default();
    }

    pub fn add_fresh(&mut self, count: T) {
        self.buckets[0] += count;
    }
}

/// Per-node employment, unemployment and open vacancies at one timestep.
///
/// Unemployed workers stay attributed to the node they last worked in.
#[derive(Debug, Clone, PartialEq)]
pub struct LabourState<T = u64> {
    pub employed: Vec<T>,
    pub unemployed: Vec<T>,
    pub vacancies: Vec<VacancyAges<T>>,
    pub timestep: usize,
}

/// Expected-count state evolved by the mean-field dynamics.
pub type ExpectedState = LabourState<f64>;

impl<T: Count> LabourState<T> {
    /// State with all vacancies at age 0.
    pub fn new(employed: Vec<T>, unemployed: Vec<T>, vacancies: Vec<T>, age_cap: usize) -> Self {
        assert_eq!(employed.len(), unemployed.len());
        assert_eq!(employed.len(), vacancies.len());
        LabourState {
            employed,
            unemployed,
            vacancies: vacancies
                .into_iter()
                .map(|v| VacancyAges::with_fresh(age_cap, v))
                .collect(),
            timestep: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.employed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.employed.is_empty()
    }

    pub fn open_vacancies(&self, node: usize) -> T {
        self.vacancies[node].total()
    }

    /// Realised demand `e + v` of a node.
    pub fn realised_demand(&self, node: usize) -> T {
        self.employed[node] + self.open_vacancies(node)
    }

    pub fn total_workers(&self) -> T {
        self.employed
            .iter()
            .chain(&self.unemployed)
            .fold(T::default(), |a, &b| a + b)
    }
}

/// Hires from origin (unemployment pool) to destination node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowMatrix<T> {
    entries: BTreeMap<(usize, usize), T>,
}

impl<T: Count> FlowMatrix<T> {
    pub fn new() -> Self {
        FlowMatrix {
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, origin: usize, dest: usize, amount: T) {
        *self.entries.entry((origin, dest)).or_default() += amount;
    }

    pub fn get(&self, origin: usize, dest: usize) -> T {
        self.entries
            .get(&(origin, dest))
            .copied()
            .unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.entries.iter().map(|(&(o, d), &f)| (o, d, f))
    }

    /// Hires into each node.
    pub fn inflows(&self, n: usize) -> Vec<T> {
        let mut out = vec![T::default(); n];
        for (_, d, f) in self.iter() {
            out[d] += f;
        }
        out
    }

    /// Hires out of each node's unemployment pool.
    pub fn outflows(&self, n: usize) -> Vec<T> {
        let mut out = vec![T::default(); n];
        for (o, _, f) in self.iter() {
            out[o] += f;
        }
        out
    }

    pub fn total(&self) -> T {
        self.entries.values().fold(T::default(), |a, &b| a + b)
    }
}

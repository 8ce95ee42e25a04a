//! Sparse online GP-SARSA.
//!
//! `Q(b, a)` is a Gaussian process with kernel `δ(a, a')·⟨b, b'⟩`. Rewards
//! are modelled as temporal differences of `Q` with noise correlated along
//! each episode, and the posterior is maintained on a dictionary of
//! representative points that grows only when a new point is poorly
//! approximated by the span of the current ones.

use std::path::Path;

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{QTable, TabularMdp};
use crate::tensor_io::{Tensor, TensorFile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Exploration {
    /// Draw one sample per action from its marginal and act greedily on it.
    PosteriorSample,
    EpsilonGreedy { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// σ².
    pub noise_variance: f64,
    /// Signal variance multiplying the linear state kernel.
    pub kernel_scale: f64,
    /// ν: minimum approximation residual for a point to join the dictionary.
    pub sparsify_threshold: f64,
    pub dictionary_cap: usize,
    pub gamma: f64,
    pub exploration: Exploration,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            noise_variance: 25.0,
            kernel_scale: 1.0,
            sparsify_threshold: 0.01,
            dictionary_cap: 1000,
            gamma: 1.0,
            exploration: Exploration::PosteriorSample,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance > 0.0) || !(self.sparsify_threshold > 0.0) || !(self.kernel_scale > 0.0) {
            return Err(Error::Config("noise variance, kernel scale and sparsification threshold must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::OutOfRange(format!("discount {} not in (0, 1]", self.gamma)));
        }
        if let Exploration::EpsilonGreedy { epsilon } = self.exploration {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(Error::OutOfRange(format!("epsilon {epsilon}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMode {
    Greedy,
    Explore,
}

/// Counters for numerical events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpStats {
    pub queries: u64,
    pub variance_clamps: u64,
    pub rejected_updates: u64,
    pub cap_rejections: u64,
}

/// Per-episode recursion state.
#[derive(Debug, Clone, PartialEq)]
struct Chain {
    x: Vec<f64>,
    action: usize,
    /// Kernel column of the previous point against the dictionary.
    k_prev: Array1<f64>,
    /// Dictionary coordinates of the previous point.
    a_prev: Array1<f64>,
    c: Array1<f64>,
    d: f64,
    /// `1/s`, zero at the start of an episode.
    s_inv: f64,
    /// Noise variance attached to the previous point.
    sigma2_prev: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum EpisodeState {
    Idle,
    Running(Box<Chain>),
    Terminated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpSarsa {
    pub cfg: KernelConfig,
    pub dim: usize,
    pub n_actions: usize,
    dict_x: Vec<Vec<f64>>,
    dict_a: Vec<usize>,
    k_inv: Array2<f64>,
    alpha: Array1<f64>,
    c_mat: Array2<f64>,
    episode: EpisodeState,
    pub stats: GpStats,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pads a vector with zeros.
fn grow1(v: &Array1<f64>, extra: usize) -> Array1<f64> {
    let mut out = Array1::zeros(v.len() + extra);
    out.slice_mut(s![..v.len()]).assign(v);
    out
}

fn grow2(m: &Array2<f64>) -> Array2<f64> {
    let n = m.nrows();
    let mut out = Array2::zeros((n + 1, n + 1));
    out.slice_mut(s![..n, ..n]).assign(m);
    out
}

impl GpSarsa {
    pub fn new(dim: usize, n_actions: usize, cfg: KernelConfig) -> Result<Self> {
        cfg.validate()?;
        if dim == 0 || n_actions == 0 {
            return Err(Error::Config("feature dimension and action count must be positive".into()));
        }
        Ok(GpSarsa {
            cfg,
            dim,
            n_actions,
            dict_x: Vec::new(),
            dict_a: Vec::new(),
            k_inv: Array2::zeros((0, 0)),
            alpha: Array1::zeros(0),
            c_mat: Array2::zeros((0, 0)),
            episode: EpisodeState::Idle,
            stats: GpStats::default(),
        })
    }

    pub fn dictionary_len(&self) -> usize {
        self.dict_a.len()
    }

    pub fn in_episode(&self) -> bool {
        !matches!(self.episode, EpisodeState::Idle)
    }

    fn check(&self, x: &[f64], action: usize) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.len(), context: "gp features" });
        }
        if action >= self.n_actions {
            return Err(Error::OutOfRange(format!("action {action} of {}", self.n_actions)));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gp features"));
        }
        Ok(())
    }

    /// Kernel column `k̃(x)` against the dictionary.
    fn kern(&self, a: &[f64], b: &[f64]) -> f64 {
        self.cfg.kernel_scale * dot(a, b)
    }

    fn kernel_column(&self, x: &[f64], action: usize) -> Array1<f64> {
        Array1::from_iter(
            self.dict_x
                .iter()
                .zip(&self.dict_a)
                .map(|(xi, &ai)| if ai == action { self.kern(xi, x) } else { 0.0 }),
        )
    }

    /// Posterior mean and variance of `Q(x, action)`. Negative variances
    /// from round-off are clamped to zero and counted.
    pub fn q_posterior(&mut self, x: &[f64], action: usize) -> Result<(f64, f64)> {
        self.check(x, action)?;
        // The delta action kernel zeroes every column entry of other actions.
        let (idx, k): (Vec<usize>, Vec<f64>) = self
            .dict_a
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == action)
            .map(|(i, _)| (i, self.kern(&self.dict_x[i], x)))
            .unzip();
        let mean: f64 = idx.iter().zip(&k).map(|(&i, ki)| ki * self.alpha[i]).sum();
        let mut quad = 0.0;
        for (&i, ki) in idx.iter().zip(&k) {
            let row = self.c_mat.row(i);
            quad += ki * idx.iter().zip(&k).map(|(&j, kj)| row[j] * kj).sum::<f64>();
        }
        let mut var = self.kern(x, x) - quad;
        self.stats.queries += 1;
        if var < 0.0 {
            if var < -1e-9 {
                log::warn!("clamping predictive variance {var:.3e}");
            }
            self.stats.variance_clamps += 1;
            var = 0.0;
        }
        Ok((mean, var))
    }

    /// Means and variances for every action.
    pub fn q_all(&mut self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut means = Vec::with_capacity(self.n_actions);
        let mut vars = Vec::with_capacity(self.n_actions);
        for a in 0..self.n_actions {
            let (m, v) = self.q_posterior(x, a)?;
            means.push(m);
            vars.push(v);
        }
        Ok((means, vars))
    }

    pub fn select_action<R: Rng + ?Sized>(&mut self, x: &[f64], mode: SelectMode, rng: &mut R) -> Result<usize> {
        self.select_allowed(x, mode, None, rng)
    }

    /// As [`GpSarsa::select_action`], restricted to actions whose `allowed`
    /// flag is set.
    pub fn select_allowed<R: Rng + ?Sized>(
        &mut self,
        x: &[f64],
        mode: SelectMode,
        allowed: Option<&[bool]>,
        rng: &mut R,
    ) -> Result<usize> {
        if allowed.is_some_and(|m| m.len() != self.n_actions) {
            return Err(Error::DimensionMismatch {
                expected: self.n_actions,
                actual: allowed.map_or(0, <[bool]>::len),
                context: "action mask",
            });
        }
        let (means, vars) = self.q_all(x)?;
        let exploration = match mode {
            SelectMode::Greedy => None,
            SelectMode::Explore => Some(self.cfg.exploration),
        };
        Ok(choose_allowed(&means, &vars, exploration, allowed, rng))
    }

    /// Dictionary coordinates `a` and residual `δ` of a point.
    fn project(&self, k: &Array1<f64>, ktt: f64) -> (Array1<f64>, f64) {
        let a = self.k_inv.dot(k);
        let delta = ktt - k.dot(&a);
        (a, delta)
    }

    /// Appends a point whose projection was `(a, δ)`.
    fn add_point(&mut self, x: &[f64], action: usize, a: &Array1<f64>, delta: f64) {
        let n = self.dict_a.len();
        let mut k_inv = grow2(&self.k_inv);
        {
            let mut top = k_inv.slice_mut(s![..n, ..n]);
            for i in 0..n {
                for j in 0..n {
                    top[[i, j]] += a[i] * a[j] / delta;
                }
            }
        }
        for i in 0..n {
            k_inv[[i, n]] = -a[i] / delta;
            k_inv[[n, i]] = -a[i] / delta;
        }
        k_inv[[n, n]] = 1.0 / delta;
        self.k_inv = k_inv;
        self.alpha = grow1(&self.alpha, 1);
        self.c_mat = grow2(&self.c_mat);
        self.dict_x.push(x.to_vec());
        self.dict_a.push(action);
    }

    fn room(&mut self, delta: f64) -> bool {
        if delta <= self.cfg.sparsify_threshold {
            return false;
        }
        if self.dict_a.len() >= self.cfg.dictionary_cap {
            self.stats.cap_rejections += 1;
            return false;
        }
        true
    }

    fn begin(&mut self, x: &[f64], action: usize) {
        let mut k = self.kernel_column(x, action);
        let ktt = self.kern(x, x);
        let (mut a, delta) = self.project(&k, ktt);
        if self.room(delta) {
            self.add_point(x, action, &a, delta);
            let n = self.dict_a.len();
            a = Array1::zeros(n);
            a[n - 1] = 1.0;
            k = grow1(&k, 1);
            k[n - 1] = ktt;
        }
        let n = self.dict_a.len();
        self.episode = EpisodeState::Running(Box::new(Chain {
            x: x.to_vec(),
            action,
            k_prev: k,
            a_prev: a,
            c: Array1::zeros(n),
            d: 0.0,
            s_inv: 0.0,
            sigma2_prev: self.cfg.noise_variance,
        }));
    }

    /// One SARSA transition `(x, action) --reward--> next`; `next = None`
    /// marks a terminal transition, which bootstraps with `Q = 0`.
    pub fn observe(&mut self, x: &[f64], action: usize, reward: f64, next: Option<(&[f64], usize)>) -> Result<()> {
        self.check(x, action)?;
        if let Some((nx, na)) = next {
            self.check(nx, na)?;
        }
        if !reward.is_finite() {
            return Err(Error::NonFinite("reward"));
        }
        match &self.episode {
            EpisodeState::Terminated => return Err(Error::EpisodeFinished),
            EpisodeState::Idle => self.begin(x, action),
            EpisodeState::Running(chain) => {
                if chain.x != x || chain.action != action {
                    return Err(Error::Config("transition does not continue the current episode".into()));
                }
            }
        }
        let EpisodeState::Running(chain) = std::mem::replace(&mut self.episode, EpisodeState::Idle) else {
            unreachable!("episode started above");
        };
        let chain = *chain;
        let gamma = self.cfg.gamma;
        let terminal = next.is_none();
        let sigma2 = if terminal { 0.0 } else { self.cfg.noise_variance };

        let (k_new, ktt) = match next {
            Some((nx, na)) => (self.kernel_column(nx, na), self.kern(nx, nx)),
            None => (Array1::zeros(self.dict_a.len()), 0.0),
        };
        let (a_new, delta) = if terminal { (Array1::zeros(self.dict_a.len()), 0.0) } else { self.project(&k_new, ktt) };
        let dk = &chain.k_prev - &(gamma * &k_new);
        let carry = gamma * chain.sigma2_prev * chain.s_inv;
        let d = carry * chain.d + reward - dk.dot(&self.alpha);
        let c_dk = self.c_mat.dot(&dk);

        let add = !terminal && self.room(delta);
        let (c_new, s_new, a_next, k_next, grow) = if add {
            let n = self.dict_a.len();
            let mut h = grow1(&chain.a_prev, 1);
            h[n] = -gamma;
            let dktt = chain.a_prev.dot(&(&chain.k_prev - &(2.0 * gamma * &k_new))) + gamma * gamma * ktt;
            let mut c = grow1(&(carry * &chain.c), 1);
            c += &h;
            c.slice_mut(s![..n]).scaled_add(-1.0, &c_dk);
            let s_val = chain.sigma2_prev + gamma * gamma * sigma2
                - gamma * gamma * chain.sigma2_prev * chain.sigma2_prev * chain.s_inv
                + dktt
                - dk.dot(&c_dk)
                + 2.0 * carry * chain.c.dot(&dk);
            let mut a_next = Array1::zeros(n + 1);
            a_next[n] = 1.0;
            let mut k_next = grow1(&k_new, 1);
            k_next[n] = ktt;
            (c, s_val, a_next, k_next, true)
        } else {
            let h = &chain.a_prev - &(gamma * &a_new);
            let c = &(carry * &chain.c) + &h - &c_dk;
            let s_val = chain.sigma2_prev + gamma * gamma * sigma2
                - gamma * gamma * chain.sigma2_prev * chain.sigma2_prev * chain.s_inv
                + dk.dot(&(&c + &(carry * &chain.c)));
            (c, s_val, a_new.clone(), k_new, false)
        };

        if !(s_new.is_finite() && s_new > 1e-12) || !d.is_finite() || c_new.iter().any(|v| !v.is_finite()) {
            log::warn!("rejecting GP update with s = {s_new:.3e}");
            self.stats.rejected_updates += 1;
            // Restart the noise chain at the next point.
            self.episode = match next {
                None => EpisodeState::Terminated,
                Some((nx, na)) => {
                    self.begin(nx, na);
                    std::mem::replace(&mut self.episode, EpisodeState::Idle)
                }
            };
            return Ok(());
        }

        if grow {
            let (nx, na) = next.expect("only non-terminal points are added");
            self.add_point(nx, na, &a_new, delta);
        }
        self.alpha.scaled_add(d / s_new, &c_new);
        let n = self.alpha.len();
        for i in 0..n {
            let ci = c_new[i] / s_new;
            if ci != 0.0 {
                self.c_mat.row_mut(i).scaled_add(ci, &c_new);
            }
        }

        self.episode = match next {
            None => EpisodeState::Terminated,
            Some((nx, na)) => EpisodeState::Running(Box::new(Chain {
                x: nx.to_vec(),
                action: na,
                k_prev: k_next,
                a_prev: a_next,
                c: c_new,
                d,
                s_inv: 1.0 / s_new,
                sigma2_prev: sigma2,
            })),
        };
        Ok(())
    }

    /// Closes a terminated episode. Fails when no terminal transition has
    /// been observed since the last call.
    pub fn end_episode(&mut self) -> Result<()> {
        match self.episode {
            EpisodeState::Terminated => {
                self.episode = EpisodeState::Idle;
                Ok(())
            }
            EpisodeState::Running(_) => Err(Error::Config("end_episode called before the terminal transition".into())),
            EpisodeState::Idle => Err(Error::NoActiveEpisode),
        }
    }

    /// Drops a partial episode without a terminal update.
    pub fn abandon_episode(&mut self) {
        self.episode = EpisodeState::Idle;
    }

    /// Frozen mean-greedy policy with per-action weight vectors
    /// `w_a = s·Σ_{i: a_i = a} α_i x_i` for kernel scale `s`.
    pub fn greedy_policy(&self) -> GreedyPolicy {
        let mut w = Array2::zeros((self.n_actions, self.dim));
        for ((xi, &ai), &al) in self.dict_x.iter().zip(&self.dict_a).zip(&self.alpha) {
            w.row_mut(ai).scaled_add(self.cfg.kernel_scale * al, &Array1::from(xi.clone()));
        }
        GreedyPolicy { weights: w }
    }

    pub fn to_tensor_file(&self) -> Result<TensorFile> {
        if self.in_episode() {
            return Err(Error::Config("cannot snapshot a posterior mid-episode".into()));
        }
        let n = self.dict_a.len();
        let mut file = TensorFile::new("gp_posterior")
            .with_meta("dim", self.dim)
            .with_meta("n_actions", self.n_actions)
            .with_meta("config", serde_json::to_value(self.cfg)?)
            .with_meta("stats", serde_json::to_value(self.stats)?);
        file.push(Tensor::new("dict_x", vec![n, self.dim], self.dict_x.concat()));
        file.push(Tensor::new("dict_a", vec![n], self.dict_a.iter().map(|&a| a as f64).collect()));
        file.push(Tensor::new("k_inv", vec![n, n], self.k_inv.iter().copied().collect()));
        file.push(Tensor::new("alpha", vec![n], self.alpha.to_vec()));
        file.push(Tensor::new("c", vec![n, n], self.c_mat.iter().copied().collect()));
        Ok(file)
    }

    pub fn from_tensor_file(file: &TensorFile) -> Result<Self> {
        file.expect_kind("gp_posterior")?;
        let dim = file.meta_usize("dim")?;
        let n_actions = file.meta_usize("n_actions")?;
        let cfg: KernelConfig = serde_json::from_value(file.meta.get("config").cloned().unwrap_or_default())?;
        let stats: GpStats = serde_json::from_value(file.meta.get("stats").cloned().unwrap_or_default())?;
        let mut gp = GpSarsa::new(dim, n_actions, cfg)?;
        let n = file.get("dict_a")?.values.len();
        let square = |name: &str| -> Result<Array2<f64>> {
            Array2::from_shape_vec((n, n), file.expect(name, &[n, n])?.values.clone()).map_err(|e| Error::Parse(e.to_string()))
        };
        gp.dict_x = file.expect("dict_x", &[n, dim])?.values.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
        gp.dict_a = file.get("dict_a")?.values.iter().map(|&a| a as usize).collect();
        if gp.dict_a.iter().any(|&a| a >= n_actions) {
            return Err(Error::Parse("dictionary action out of range".into()));
        }
        gp.k_inv = square("k_inv")?;
        gp.alpha = Array1::from(file.expect("alpha", &[n])?.values.clone());
        gp.c_mat = square("c")?;
        gp.stats = stats;
        Ok(gp)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_tensor_file()?.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::load(path)?)
    }
}

/// Mean-greedy policy detached from the posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPolicy {
    pub weights: Array2<f64>,
}

impl GreedyPolicy {
    pub fn q_values(&self, x: &[f64]) -> Vec<f64> {
        self.weights.rows().into_iter().map(|w| dot(w.as_slice().expect("standard layout"), x)).collect()
    }

    pub fn act(&self, x: &[f64]) -> usize {
        argmax(&self.q_values(x))
    }

    pub fn act_allowed(&self, x: &[f64], allowed: Option<&[bool]>) -> usize {
        argmax_allowed(&self.q_values(x), allowed)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    argmax_allowed(values, None)
}

/// Argmax over the permitted indices. An all-false mask permits everything.
pub fn argmax_allowed(values: &[f64], allowed: Option<&[bool]>) -> usize {
    let allowed = allowed.filter(|m| m.contains(&true));
    let ok = |i: usize| allowed.is_none_or(|m| m[i]);
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if ok(i) && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

/// Action choice from per-action posterior marginals. `None` is greedy on
/// the means.
pub fn choose_action<R: Rng + ?Sized>(means: &[f64], vars: &[f64], exploration: Option<Exploration>, rng: &mut R) -> usize {
    choose_allowed(means, vars, exploration, None, rng)
}

/// [`choose_action`] restricted to the actions flagged in `allowed`.
pub fn choose_allowed<R: Rng + ?Sized>(
    means: &[f64],
    vars: &[f64],
    exploration: Option<Exploration>,
    allowed: Option<&[bool]>,
    rng: &mut R,
) -> usize {
    let allowed = allowed.filter(|m| m.contains(&true));
    match exploration {
        None => argmax_allowed(means, allowed),
        Some(Exploration::EpsilonGreedy { epsilon }) => {
            if rng.random::<f64>() < epsilon {
                match allowed {
                    None => rng.random_range(0..means.len()),
                    Some(m) => {
                        let ids: Vec<usize> = (0..m.len()).filter(|&i| m[i]).collect();
                        ids[rng.random_range(0..ids.len())]
                    }
                }
            } else {
                argmax_allowed(means, allowed)
            }
        }
        Some(Exploration::PosteriorSample) => {
            let samples: Vec<f64> = means
                .iter()
                .zip(vars)
                .enumerate()
                .map(|(i, (&m, &v))| {
                    if allowed.is_some_and(|mask| !mask[i]) {
                        f64::NEG_INFINITY
                    } else if v > 0.0 {
                        Normal::new(m, v.sqrt()).expect("positive deviation").sample(rng)
                    } else {
                        m
                    }
                })
                .collect();
            argmax_allowed(&samples, allowed)
        }
    }
}

/// Settings for running GP-SARSA on a tabular MDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularRun {
    pub kernel: KernelConfig,
    pub episodes: usize,
    /// Episodes longer than this are abandoned without a terminal update.
    pub max_steps: usize,
    /// Height of the one-hot state features; the prior standard deviation
    /// of every `Q(s, a)`.
    pub feature_scale: f64,
}

impl TabularRun {
    fn features(&self, mdp: &TabularMdp, s: usize) -> Vec<f64> {
        let mut x = vec![0.0; mdp.n_states];
        x[s] = self.feature_scale;
        x
    }
}

/// Trains on a tabular MDP with one-hot state features, exploring by the
/// configured scheme.
pub fn learn_tabular(mdp: &TabularMdp, run: &TabularRun, seed: u64) -> Result<GpSarsa> {
    let mut gp = GpSarsa::new(mdp.n_states, mdp.n_actions, run.kernel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one_hot = |s: usize| run.features(mdp, s);
    for _ in 0..run.episodes {
        let mut state = mdp.start;
        let mut x = one_hot(state);
        let mut action = gp.select_action(&x, SelectMode::Explore, &mut rng)?;
        let mut finished = false;
        for _ in 0..run.max_steps {
            let (next, reward) = mdp.sample(state, action, &mut rng);
            if mdp.terminal[next] {
                gp.observe(&x, action, reward, None)?;
                gp.end_episode()?;
                finished = true;
                break;
            }
            let nx = one_hot(next);
            let na = gp.select_action(&nx, SelectMode::Explore, &mut rng)?;
            gp.observe(&x, action, reward, Some((&nx, na)))?;
            state = next;
            x = nx;
            action = na;
        }
        if !finished {
            gp.abandon_episode();
        }
    }
    Ok(gp)
}

/// Whether the mean-greedy action in every live state is one of the
/// optimal actions.
pub fn matches_optimal(mdp: &TabularMdp, run: &TabularRun, gp: &GpSarsa, optimal: &QTable) -> bool {
    let policy = gp.greedy_policy();
    (0..mdp.n_states)
        .filter(|&s| !mdp.terminal[s])
        .all(|s| optimal.greedy_set(s, 1e-9).contains(&policy.act(&run.features(mdp, s))))
}

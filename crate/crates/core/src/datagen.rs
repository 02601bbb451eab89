//! Federated datasets: the Synthetic(α, β) generator, label-skewed power-law
//! partitioning and CSV ingestion.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Fraction of every client's samples held out for evaluation.
pub const TEST_FRACTION: f64 = 0.2;

/// Smallest shard a client may receive: one training and one test sample.
pub const MIN_CLIENT_SAMPLES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Self { features, label }
    }
}

/// The local data of one client, split into a training and a test part.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientShard {
    pub client_id: usize,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl ClientShard {
    /// Number of training samples, the `n_k` used for aggregation weights.
    pub fn num_train(&self) -> usize {
        self.train.len()
    }

    pub fn num_samples(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.train.iter().chain(&self.test).map(|s| s.label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Variance of the per-client mean of the labelling model.
    pub alpha: f64,
    /// Variance of the per-client mean of the feature distribution.
    pub beta: f64,
    pub num_clients: usize,
    pub dim: usize,
    pub num_classes: usize,
    pub total_samples: usize,
    pub power_law_exponent: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            num_clients: 100,
            dim: 60,
            num_classes: 10,
            total_samples: 75_349,
            power_law_exponent: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.num_classes < 2 {
            return bad(format!(
                "num_classes must be at least 2, got {}",
                self.num_classes
            ));
        }
        if self.dim < 1 {
            return bad("dim must be at least 1".into());
        }
        if self.num_clients == 0 {
            return bad("num_clients must be positive".into());
        }
        if self.total_samples < self.num_clients * MIN_CLIENT_SAMPLES {
            return bad(format!(
                "total_samples ({}) must be at least {} per client ({} clients)",
                self.total_samples, MIN_CLIENT_SAMPLES, self.num_clients
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite())
            || !(self.beta >= 0.0 && self.beta.is_finite())
        {
            return bad("alpha and beta must be finite and non-negative".into());
        }
        if !self.power_law_exponent.is_finite() {
            return bad("power_law_exponent must be finite".into());
        }
        Ok(())
    }
}

/// The hidden parameters a synthetic client's data was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticClient {
    /// Mean of the labelling model entries (`u_k`).
    pub model_mean: f64,
    /// Mean of the feature-mean entries (`B_k`).
    pub feature_mean_center: f64,
    /// Row-major `num_classes × dim` labelling weights.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub feature_mean: Vec<f64>,
}

impl SyntheticClient {
    /// Label the generator assigns to `x`: argmax of `W x + b` (softmax is monotone).
    pub fn label_of(&self, x: &[f64]) -> usize {
        let dim = x.len();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (c, b) in self.bias.iter().enumerate() {
            let row = &self.weights[c * dim..(c + 1) * dim];
            let score = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b;
            if score > best_score {
                best_score = score;
                best = c;
            }
        }
        best
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, std_dev: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + std_dev * z
}

/// Generates the Synthetic(α, β) federated dataset.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<ClientShard>> {
    generate_synthetic_with_generators(spec).map(|(shards, _)| shards)
}

/// Like [`generate_synthetic`] but also returns each client's generating parameters.
pub fn generate_synthetic_with_generators(
    spec: &SyntheticSpec,
) -> Result<(Vec<ClientShard>, Vec<SyntheticClient>)> {
    spec.validate()?;
    let sizes = power_law_sizes(
        spec.total_samples,
        spec.num_clients,
        spec.power_law_exponent,
        MIN_CLIENT_SAMPLES,
    )?;
    let feature_std: Vec<f64> = (1..=spec.dim)
        .map(|j| (j as f64).powf(-1.2).sqrt())
        .collect();

    let mut shards = Vec::with_capacity(spec.num_clients);
    let mut generators = Vec::with_capacity(spec.num_clients);
    for (k, &size) in sizes.iter().enumerate() {
        let mut rng = rng::stream(spec.seed, Purpose::SyntheticClient, k as u64, 0);
        let model_mean = normal(&mut rng, 0.0, spec.alpha.sqrt());
        let feature_mean_center = normal(&mut rng, 0.0, spec.beta.sqrt());
        let weights: Vec<f64> = (0..spec.num_classes * spec.dim)
            .map(|_| normal(&mut rng, model_mean, 1.0))
            .collect();
        let bias: Vec<f64> = (0..spec.num_classes)
            .map(|_| normal(&mut rng, model_mean, 1.0))
            .collect();
        let feature_mean: Vec<f64> = (0..spec.dim)
            .map(|_| normal(&mut rng, feature_mean_center, 1.0))
            .collect();
        let generator = SyntheticClient {
            model_mean,
            feature_mean_center,
            weights,
            bias,
            feature_mean,
        };

        let samples: Vec<Sample> = (0..size)
            .map(|_| {
                let x: Vec<f64> = generator
                    .feature_mean
                    .iter()
                    .zip(&feature_std)
                    .map(|(&m, &s)| normal(&mut rng, m, s))
                    .collect();
                let label = generator.label_of(&x);
                Sample::new(x, label)
            })
            .collect();
        shards.push(split_train_test(k, samples)?);
        generators.push(generator);
    }
    Ok((shards, generators))
}

/// Splits one client's samples into train and test, keeping at least one of each.
fn split_train_test(client_id: usize, mut samples: Vec<Sample>) -> Result<ClientShard> {
    let n = samples.len();
    if n < MIN_CLIENT_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "client {client_id} has {n} samples, needs at least {MIN_CLIENT_SAMPLES}"
        )));
    }
    let num_test = ((n as f64 * TEST_FRACTION).round() as usize).clamp(1, n - 1);
    let test = samples.split_off(n - num_test);
    Ok(ClientShard {
        client_id,
        train: samples,
        test,
    })
}

/// Power-law client sizes `s_k ∝ (k+1)^-exponent` summing exactly to `total`.
///
/// Every client first gets `min_each`; the rest is shared proportionally and
/// rounded by largest remainder, ties going to the lower index. The result is
/// non-increasing.
pub fn power_law_sizes(
    total: usize,
    num_clients: usize,
    exponent: f64,
    min_each: usize,
) -> Result<Vec<usize>> {
    if num_clients == 0 {
        return Err(Error::InvalidParameter(
            "num_clients must be positive".into(),
        ));
    }
    if total < num_clients * min_each {
        return Err(Error::InvalidParameter(format!(
            "{total} samples cannot give {num_clients} clients at least {min_each} each"
        )));
    }
    let raw: Vec<f64> = (0..num_clients)
        .map(|k| ((k + 1) as f64).powf(-exponent))
        .collect();
    let raw_sum: f64 = raw.iter().sum();
    let spare = total - num_clients * min_each;

    let quotas: Vec<f64> = raw.iter().map(|r| r / raw_sum * spare as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..num_clients).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(spare.saturating_sub(assigned)) {
        sizes[k] += 1;
    }
    for s in &mut sizes {
        *s += min_each;
    }
    Ok(sizes)
}

/// How labelled samples are spread over clients.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOptions {
    /// Distinct labels a client may hold; `None` means no label constraint.
    pub classes_per_client: Option<usize>,
    pub power_law_exponent: f64,
    pub seed: u64,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            classes_per_client: None,
            power_law_exponent: 1.0,
            seed: 0,
        }
    }
}

/// Classes owned by `client`: a window of consecutive labels. Consecutive clients
/// step by `per_client`, and each full sweep over the labels shifts by one so
/// windows of different sweeps overlap.
fn class_window(client: usize, per_client: usize, num_classes: usize) -> Vec<usize> {
    let sweeps = num_classes.div_ceil(per_client);
    let start = client * per_client + client / sweeps;
    (0..per_client).map(|j| (start + j) % num_classes).collect()
}

/// Distributes `samples` over `num_clients` shards with power-law sizes, each
/// shard holding at most `classes_per_client` distinct labels.
///
/// Every input sample lands in exactly one shard. The per-client class counts
/// are found by a transportation (bipartite flow) solve, so shard sizes hit the
/// power-law targets exactly whenever the label constraint allows it.
pub fn partition_label_skew(
    samples: Vec<Sample>,
    num_clients: usize,
    classes_per_client: usize,
    power_law_exponent: f64,
    seed: u64,
) -> Result<Vec<ClientShard>> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if num_clients == 0 {
        return Err(Error::InvalidParameter(
            "num_clients must be positive".into(),
        ));
    }
    let dim = samples[0].features.len();
    if let Some(bad) = samples.iter().find(|s| s.features.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.features.len(),
        });
    }
    let num_classes = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
    if classes_per_client == 0 || classes_per_client > num_classes {
        return Err(Error::InvalidParameter(format!(
            "classes_per_client must be in 1..={num_classes}, got {classes_per_client}"
        )));
    }

    let targets = power_law_sizes(
        samples.len(),
        num_clients,
        power_law_exponent,
        MIN_CLIENT_SAMPLES,
    )?;

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, s) in samples.iter().enumerate() {
        by_class[s.label].push(i);
    }
    for (c, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng::stream(seed, Purpose::Partition, c as u64, 0));
    }
    let supply: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let windows: Vec<Vec<usize>> = (0..num_clients)
        .map(|k| class_window(k, classes_per_client, num_classes))
        .collect();

    let flow = solve_transport(&targets, &windows, &supply)?;

    let mut pool: Vec<Option<Sample>> = samples.into_iter().map(Some).collect();
    let mut cursor = vec![0usize; num_classes];
    let mut shards = Vec::with_capacity(num_clients);
    for (k, window) in windows.iter().enumerate() {
        let mut mine = Vec::with_capacity(targets[k]);
        for (j, &c) in window.iter().enumerate() {
            for &idx in &by_class[c][cursor[c]..cursor[c] + flow[k][j]] {
                mine.push(pool[idx].take().expect("sample assigned twice"));
            }
            cursor[c] += flow[k][j];
        }
        mine.shuffle(&mut rng::stream(seed, Purpose::Split, k as u64, 0));
        shards.push(split_train_test(k, mine)?);
    }
    debug_assert!(pool.iter().all(Option::is_none));
    Ok(shards)
}

/// Finds integer amounts `flow[k][j]` of class `windows[k][j]` for each client so
/// that client `k` receives exactly `targets[k]` samples and no class gives more
/// than its supply. Greedy start, then augmenting paths.
fn solve_transport(
    targets: &[usize],
    windows: &[Vec<usize>],
    supply: &[usize],
) -> Result<Vec<Vec<usize>>> {
    let num_classes = supply.len();
    let mut owners: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_classes];
    for (k, w) in windows.iter().enumerate() {
        for (j, &c) in w.iter().enumerate() {
            owners[c].push((k, j));
        }
    }
    if let Some(c) = (0..num_classes).find(|&c| owners[c].is_empty() && supply[c] > 0) {
        return Err(Error::UnownedClass {
            class: c,
            available: supply[c],
        });
    }

    let mut remaining = supply.to_vec();
    let mut flow: Vec<Vec<usize>> = windows.iter().map(|w| vec![0; w.len()]).collect();
    let mut deficit = targets.to_vec();

    for k in 0..targets.len() {
        let mut order: Vec<usize> = (0..windows[k].len()).collect();
        order.sort_by_key(|&j| std::cmp::Reverse(remaining[windows[k][j]]));
        for j in order {
            let c = windows[k][j];
            let take = deficit[k].min(remaining[c]);
            flow[k][j] += take;
            remaining[c] -= take;
            deficit[k] -= take;
        }
    }

    let num_clients = targets.len();
    for s in 0..num_clients {
        while deficit[s] > 0 {
            // BFS over the residual graph: client -> owned class (forward),
            // class -> client already drawing from it (backward).
            let mut class_parent: Vec<Option<usize>> = vec![None; num_classes];
            let mut client_parent: Vec<Option<(usize, usize)>> = vec![None; num_clients];
            let mut seen_client = vec![false; num_clients];
            seen_client[s] = true;
            let mut queue = std::collections::VecDeque::from([s]);
            let mut sink_class = None;
            'bfs: while let Some(u) = queue.pop_front() {
                for &c in &windows[u] {
                    if class_parent[c].is_some() {
                        continue;
                    }
                    class_parent[c] = Some(u);
                    if remaining[c] > 0 {
                        sink_class = Some(c);
                        break 'bfs;
                    }
                    for &(v, jv) in &owners[c] {
                        if !seen_client[v] && flow[v][jv] > 0 {
                            seen_client[v] = true;
                            client_parent[v] = Some((c, jv));
                            queue.push_back(v);
                        }
                    }
                }
            }
            let Some(end) = sink_class else {
                let class = windows[s][0];
                return Err(Error::InfeasibleSkew {
                    class,
                    demanded: supply[class] + deficit[s],
                    available: supply[class],
                });
            };

            let mut delta = deficit[s].min(remaining[end]);
            let mut c = end;
            loop {
                let u = class_parent[c].expect("path");
                if u == s {
                    break;
                }
                let (prev, jv) = client_parent[u].expect("path");
                delta = delta.min(flow[u][jv]);
                c = prev;
            }

            let mut c = end;
            loop {
                let u = class_parent[c].expect("path");
                let j = windows[u]
                    .iter()
                    .position(|&x| x == c)
                    .expect("owned class");
                flow[u][j] += delta;
                if u == s {
                    break;
                }
                let (prev, jv) = client_parent[u].expect("path");
                flow[u][jv] -= delta;
                c = prev;
            }
            remaining[end] -= delta;
            deficit[s] -= delta;
        }
    }
    Ok(flow)
}

/// Reads labelled feature vectors from a CSV file and partitions them over
/// `num_clients` clients.
///
/// The first row is a header; `label_column` names the label column and every
/// other column is a numeric feature. Error rows are reported by file line.
pub fn ingest_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    num_clients: usize,
    options: &PartitionOptions,
) -> Result<Vec<ClientShard>> {
    let samples = read_labeled_csv(path, label_column)?;
    let num_classes = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
    let per_client = options.classes_per_client.unwrap_or(num_classes);
    partition_label_skew(
        samples,
        num_clients,
        per_client,
        options.power_law_exponent,
        options.seed,
    )
}

pub fn read_labeled_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Vec<Sample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MalformedRow {
            row: 1,
            message: format!("no column named {label_column:?} in header"),
        })?;
    let width = headers.len();

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(Error::MalformedRow {
                row,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let raw_label = &record[label_idx];
        let label = raw_label
            .parse::<usize>()
            .map_err(|_| Error::InvalidLabel {
                row,
                value: raw_label.to_string(),
            })?;
        let mut features = Vec::with_capacity(width - 1);
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            let value = field.parse::<f64>().map_err(|_| Error::MalformedRow {
                row,
                message: format!("column {:?}: {field:?} is not a number", &headers[i]),
            })?;
            features.push(value);
        }
        samples.push(Sample::new(features, label));
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(samples)
}

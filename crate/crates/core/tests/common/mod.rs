//! Shared oracles and fixtures for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use pet_happiness::annotate::{AnnotationStore, Provenance};
use pet_happiness::config::PipelineConfig;
use pet_happiness::corpus::Corpus;
use pet_happiness::demographics::UserDemographics;
use pet_happiness::happiness::HiRecord;
use pet_happiness::ownership::{OwnershipVerdict, PetPost, PetType};
use pet_happiness::pipeline::{compute_demographics, compute_happiness, compute_verdicts, Prepared};
use pet_happiness::synthgen::{generate_corpus, GroundTruth, SynthConfig};

/// Upper incomplete gamma ratio Q(a, x) by direct quadrature.
///
/// Q(a, x) = e^-x / G(a) * int_0^inf (x + s)^(a-1) e^-s ds, and s = u^2 removes
/// the endpoint singularity for a < 1. Only half-integer `a` is supported so
/// G(a) can be written down exactly.
pub fn quadrature_q(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let f = |u: f64| 2.0 * u * (x + u * u).powf(a - 1.0) * (-u * u).exp();
    let upper = 12.0 + a.sqrt() * 2.0;
    let rough = simpson(&f, 0.0, upper, 64);
    let integral = adaptive_simpson(&f, 0.0, upper, rough.abs() * 1e-14, 50);
    (-x).exp() * integral / half_integer_gamma(a)
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = lo + h;
            (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi))
        })
        .sum()
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// G(n) = (n-1)! and G(n + 1/2) = (2n)! sqrt(pi) / (4^n n!).
pub fn half_integer_gamma(a: f64) -> f64 {
    let twice = (2.0 * a).round() as u64;
    assert!(
        (2.0 * a - twice as f64).abs() < 1e-12 && twice > 0,
        "half-integer argument required"
    );
    if twice.is_multiple_of(2) {
        (1..twice / 2).map(|k| k as f64).product()
    } else {
        let n = (twice - 1) / 2;
        let mut g = std::f64::consts::PI.sqrt();
        for k in 0..n {
            g *= k as f64 + 0.5;
        }
        g
    }
}

/// All-pairs ownership oracle: returns the pet type a user owns, if any.
pub fn brute_force_owner(posts: &[PetPost], min_gap_secs: i64) -> Option<PetType> {
    let mut qualifying = Vec::new();
    for kind in [PetType::Cat, PetType::Dog] {
        let ts: Vec<i64> = posts.iter().filter(|p| p.klass == kind).map(|p| p.timestamp).collect();
        let mut found = false;
        for i in 0..ts.len() {
            for j in 0..ts.len() {
                if ts[i] - ts[j] > min_gap_secs {
                    found = true;
                }
            }
        }
        if found {
            qualifying.push((kind, ts.len(), *ts.iter().min().unwrap()));
        }
    }
    match qualifying.as_slice() {
        [] => None,
        [(k, _, _)] => Some(*k),
        [(cat, nc, fc), (dog, nd, fd)] => {
            if nc != nd {
                Some(if nc > nd { *cat } else { *dog })
            } else if fc != fd {
                Some(if fc < fd { *cat } else { *dog })
            } else {
                Some(*cat)
            }
        }
        _ => unreachable!(),
    }
}

/// Stage outputs from running the library pipeline on a synthetic corpus in memory.
pub struct SynthRun {
    pub truth: Vec<GroundTruth>,
    pub verdicts: Vec<OwnershipVerdict>,
    pub hi: Vec<HiRecord>,
    pub demographics: Vec<UserDemographics>,
}

impl SynthRun {
    pub fn truth_by_user(&self) -> BTreeMap<&str, &GroundTruth> {
        self.truth.iter().map(|t| (t.user_id.as_str(), t)).collect()
    }

    /// Share of ground-truth users whose verdict matches their true status.
    pub fn ownership_accuracy(&self) -> f64 {
        let verdicts: BTreeMap<&str, bool> = self
            .verdicts
            .iter()
            .map(|v| (v.user_id.as_str(), v.is_owner()))
            .collect();
        let right = self
            .truth
            .iter()
            .filter(|t| verdicts.get(t.user_id.as_str()) == Some(&t.is_owner))
            .count();
        right as f64 / self.truth.len() as f64
    }
}

pub fn run_synth(synth: &SynthConfig, cfg: &PipelineConfig) -> SynthRun {
    let corpus = generate_corpus(synth).expect("valid synth config");
    let posts = Corpus {
        posts: corpus.posts,
        report: Default::default(),
    };
    let store =
        AnnotationStore::from_annotations(corpus.annotations, Provenance::Synthetic).expect("unique image refs");
    let prep = Prepared::new(&posts, &store, cfg).expect("window resolves");
    SynthRun {
        verdicts: compute_verdicts(&prep, &store, cfg),
        hi: compute_happiness(&prep, &store),
        demographics: compute_demographics(&prep, &store, cfg),
        truth: corpus.ground_truth,
    }
}

pub fn pet_post(id: &str, day: f64, klass: PetType) -> PetPost {
    PetPost {
        post_id: id.to_string(),
        timestamp: 1_433_116_800 + (day * 86_400.0) as i64,
        klass,
        confidence: 0.9,
    }
}

/// Minimal HTTP/1.1 server standing in for the remote annotator. Each
/// connection carries one request; `handler` sees the request number and the
/// JSON body and returns a status code and response body.
pub struct StubServer {
    pub url: String,
    pub requests: std::sync::Arc<std::sync::atomic::AtomicUsize>,
}

impl StubServer {
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(usize, &serde_json::Value) -> (u16, String) + Send + Sync + 'static,
    {
        use std::io::{BufRead, BufReader, Read, Write};
        use std::sync::atomic::Ordering;
        use std::sync::Arc;

        let listener = std::net::TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(std::sync::atomic::AtomicUsize::new(0));
        let counter = Arc::clone(&requests);
        let handler = Arc::new(handler);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let counter = Arc::clone(&counter);
                let handler = Arc::clone(&handler);
                std::thread::spawn(move || {
                    let mut reader = BufReader::new(stream.try_clone().unwrap());
                    let mut length = 0usize;
                    loop {
                        let mut line = String::new();
                        if reader.read_line(&mut line).unwrap_or(0) == 0 {
                            return;
                        }
                        let line = line.trim_end();
                        if line.is_empty() {
                            break;
                        }
                        if let Some((k, v)) = line.split_once(':') {
                            if k.eq_ignore_ascii_case("content-length") {
                                length = v.trim().parse().unwrap_or(0);
                            }
                        }
                    }
                    let mut body = vec![0u8; length];
                    if reader.read_exact(&mut body).is_err() {
                        return;
                    }
                    let json = serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null);
                    let n = counter.fetch_add(1, Ordering::SeqCst);
                    let (status, text) = handler(n, &json);
                    let reply = format!(
                        "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                        text.len()
                    );
                    let _ = stream.write_all(reply.as_bytes());
                });
            }
        });
        Self { url, requests }
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(std::sync::atomic::Ordering::SeqCst)
    }
}

/// Refs listed in an annotator request body.
pub fn requested_refs(body: &serde_json::Value) -> Vec<String> {
    body["image_refs"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
        .unwrap_or_default()
}

/// A valid no-pet, no-face annotation for every requested ref.
pub fn echo_annotations(body: &serde_json::Value) -> String {
    let items: Vec<serde_json::Value> = requested_refs(body)
        .into_iter()
        .map(|r| serde_json::json!({"image_ref": r, "pet": {"klass": "other", "confidence": 0.0}, "faces": []}))
        .collect();
    serde_json::Value::Array(items).to_string()
}

/// A URL nobody is listening on.
pub fn dead_url() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}")
}

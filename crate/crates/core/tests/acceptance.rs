//! Acceptance run: one PASS/FAIL line per criterion, failing checks listed
//! underneath. Exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use spinlev::acceptance::{self, AcceptanceConfig, Section};

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

struct Line {
    label: &'static str,
    section: Section,
    extra: Option<String>,
    extra_ok: bool,
}

fn timed(label: &'static str, limit: Duration, f: fn(&AcceptanceConfig) -> Section, cfg: &AcceptanceConfig) -> Line {
    let start = Instant::now();
    let section = pool(1).install(|| f(cfg));
    let dt = start.elapsed();
    Line { label, section, extra: Some(format!("single-threaded runtime {dt:.2?} (limit {limit:?})")), extra_ok: dt < limit }
}

fn plain(label: &'static str, f: fn(&AcceptanceConfig) -> Section, cfg: &AcceptanceConfig) -> Line {
    Line { label, section: f(cfg), extra: None, extra_ok: true }
}

fn report_bytes(threads: usize, cfg: &AcceptanceConfig) -> Vec<u8> {
    let r = pool(threads).install(|| acceptance::run_all(cfg)).unwrap();
    serde_json::to_vec_pretty(&r).unwrap()
}

fn main() {
    let cfg = AcceptanceConfig::default();
    let mut lines = vec![
        timed("oracle and closed-form branches agree", Duration::from_secs(300), acceptance::oracle_equivalence, &cfg),
        plain("squeezing parameter matches tabulated closed forms", acceptance::squeezing_table, &cfg),
        plain("backaction zeros and echo-train displacement", acceptance::backaction_zeros, &cfg),
        plain("witness identities", acceptance::witness_identities, &cfg),
        plain("witness agrees with Fock-space moments", acceptance::witness_oracle, &cfg),
        timed("bath Monte Carlo reproduces closed forms", Duration::from_secs(600), acceptance::bath_monte_carlo, &cfg),
        plain("pulsed witness cutoff and threshold occupation", acceptance::pulsed_witness, &cfg),
        plain("micro-diamond sensitivity spectrum", acceptance::sensitivity_spectrum, &cfg),
        plain("device anchors within a factor of three", acceptance::device_anchors, &cfg),
        plain("standard quantum limit structure", acceptance::sql_structure, &cfg),
        plain("squeezed readout against Gaussian twist", acceptance::squeezed_readout, &cfg),
    ];

    let bytes: Vec<Vec<u8>> = [1, 4, 8].iter().map(|&n| report_bytes(n, &cfg)).collect();
    let identical = bytes.windows(2).all(|w| w[0] == w[1]);
    let mut det = plain("reports are byte-identical across thread counts", acceptance::thread_invariance, &cfg);
    det.extra = Some(format!("full report {} bytes, identical across 1/4/8 threads: {identical}", bytes[0].len()));
    det.extra_ok = identical;
    lines.push(det);

    let mut failed = 0;
    for l in &lines {
        let n = l.section.checks.len();
        let ok = l.section.checks.iter().filter(|c| c.pass).count();
        let pass = l.section.passed() && l.extra_ok;
        if !pass {
            failed += 1;
        }
        println!("{} {} ({ok}/{n} checks)", if pass { "PASS" } else { "FAIL" }, l.label);
        for c in l.section.checks.iter().filter(|c| !c.pass) {
            println!("       x {}: expected {}, observed {:e}, tolerance {:e}", c.check_name, c.expected, c.observed, c.tolerance);
        }
        for note in &l.section.notes {
            println!("       . {} = {:e} (reference {})", note.name, note.value, note.reference);
        }
        if let Some(e) = &l.extra {
            println!("       {} {e}", if l.extra_ok { "." } else { "x" });
        }
    }
    println!("acceptance: {} of {} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

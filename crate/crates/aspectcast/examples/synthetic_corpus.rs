//! Regenerates the bundled synthetic corpus.
//!
//! ```text
//! cargo run -p aspectcast --example synthetic_corpus -- [out_dir]
//! ```
//!
//! Writes `synthetic_reviews.jsonl` (20 reviews per quarter, 2015Q4 to
//! 2018Q4) and `synthetic_revenue.csv` (2015Q2 to 2018Q4). Each aspect
//! follows a seeded latent mood per quarter that decides whether its
//! clauses are positive or negative; revenue growth is a noisy linear
//! function of a few of those moods.

use std::fmt::Write as _;
use std::path::PathBuf;

use aspectcast_core::aspect::builtin_aspects;
use aspectcast_core::corpus::Quarter;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SEED: u64 = 20190801;
const REVIEWS_PER_QUARTER: usize = 20;

const POSITIVE: &[&str] = &[
    "great",
    "excellent",
    "good",
    "impressive",
    "awesome",
    "nice",
    "helpful",
    "solid",
    "amazing",
    "fantastic",
];
const NEGATIVE: &[&str] = &[
    "terrible",
    "bad",
    "poor",
    "awful",
    "frustrating",
    "disappointing",
    "horrible",
    "annoying",
    "weak",
    "painful",
];
const BOOSTERS: &[&str] = &["very", "really", "extremely", "quite"];
const SOURCES: &[&str] = &[
    "G2 Crowd",
    "TrustRadius",
    "Gartner Peer Insights",
    "Clutch",
    "Spiceworks",
];
const FILLER: &[&str] = &[
    "We moved most of our workloads last year.",
    "Our company runs a mid-sized web platform.",
    "We evaluated three providers before choosing.",
    "I have used it for about two years.",
    "We run analytics and a few internal tools on it.",
];

/// Phrases each aspect's clauses are built around (all in the bundled vocabulary).
fn keywords(aspect: &str) -> &'static [&'static str] {
    match aspect {
        "greater_scalability" => &["scalability", "auto scaling", "elasticity"],
        "faster_access_to_infrastructure" => &["provisioning", "quick setup", "infrastructure"],
        "managing_multiple_services" => &["management console", "dashboard", "console"],
        "security_concerns" => &["security", "encryption", "compliance"],
        "cost_savings" => &["pricing", "billing", "cost"],
        "higher_availability" => &["uptime", "availability", "reliability"],
        "lack_of_control" => &["visibility", "control over resources"],
        "higher_performance" => &["performance", "latency", "speed"],
        "lack_of_expertise_resources" => &["documentation", "learning curve"],
        "it_staff_efficiency" => &["automation", "productivity"],
        "provider_lock_in" => &["migration", "switching story"],
        "business_continuity" => &["backup", "disaster recovery", "failover"],
        "move_from_capex_to_opex" => &["pay as you go model", "subscription"],
        "after_sales_experience" => &["customer service", "support", "troubleshooting", "customer care"],
        "market_responsiveness" => &["new features", "roadmap", "innovation"],
        "marketing_execution" => &["marketing", "free tier", "sales team"],
        _ => unreachable!("unknown aspect {aspect}"),
    }
}

fn clause(rng: &mut ChaCha8Rng, keyword: &str, positive: bool) -> String {
    let adj = *if positive { POSITIVE } else { NEGATIVE }.choose(rng).unwrap();
    let booster = *BOOSTERS.choose(rng).unwrap();
    let frame = rng.random_range(0..6);
    let mut s = match frame {
        0 => format!("The {keyword} is {adj}."),
        1 => format!("The {keyword} has been {booster} {adj} for us."),
        2 => {
            // negated opposite
            let other = *if positive { NEGATIVE } else { POSITIVE }.choose(rng).unwrap();
            format!("Honestly the {keyword} is not {other}.")
        }
        3 => format!("{} {keyword}", capitalize(adj)),
        4 => format!("I found the {keyword} {booster} {adj}."),
        _ => format!("Their {keyword} was {adj} overall."),
    };
    if frame == 3 || rng.random_bool(0.15) {
        if s.ends_with('.') {
            s.pop();
        }
        s.push('!');
    }
    s
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let aspects = builtin_aspects();
    let first_revenue: Quarter = "2015Q2".parse().unwrap();
    let first_review: Quarter = "2015Q4".parse().unwrap();
    let last: Quarter = "2018Q4".parse().unwrap();

    let mut quarters = vec![first_revenue];
    while *quarters.last().unwrap() != last {
        let next = quarters.last().unwrap().next();
        quarters.push(next);
    }

    // latent mood in (-1, 1) per quarter and aspect: AR(1) walk through tanh
    let step = Normal::new(0.0, 0.6).unwrap();
    let mut level: Vec<f64> = aspects.iter().map(|_| step.sample(&mut rng)).collect();
    let mut moods: Vec<Vec<f64>> = Vec::new();
    for _ in &quarters {
        for l in level.iter_mut() {
            *l = 0.6 * *l + step.sample(&mut rng);
        }
        moods.push(level.iter().map(|l| l.tanh()).collect());
    }
    let idx = |id: &str| aspects.iter().position(|a| a.id == id).unwrap();
    let (cost, after_sales, lock_in, security) = (
        idx("cost_savings"),
        idx("after_sales_experience"),
        idx("provider_lock_in"),
        idx("security_concerns"),
    );

    let noise = Normal::new(0.0, 0.004).unwrap();
    let mut revenue = String::from("quarter,revenue\n");
    let mut value = 1824.0_f64;
    writeln!(revenue, "{first_revenue},{value:.1}").unwrap();
    for (i, q) in quarters.iter().enumerate().skip(1) {
        let m = &moods[i];
        let g = 0.075 + 0.025 * m[cost] + 0.02 * m[after_sales] - 0.012 * m[lock_in]
            + 0.01 * m[security]
            + noise.sample(&mut rng);
        value *= 1.0 + g;
        writeln!(revenue, "{q},{value:.1}").unwrap();
    }

    let mut reviews = String::new();
    let mut n = 0;
    for (qi, q) in quarters.iter().enumerate() {
        if *q < first_review {
            continue;
        }
        for _ in 0..REVIEWS_PER_QUARTER {
            n += 1;
            let mut parts = Vec::new();
            if rng.random_bool(0.4) {
                parts.push(FILLER.choose(&mut rng).unwrap().to_string());
            }
            let k = rng.random_range(1..=3);
            let mut chosen: Vec<usize> = Vec::new();
            while chosen.len() < k {
                // after-sales and cost come up most often in reviews
                let a = if rng.random_bool(0.3) {
                    *[after_sales, cost].choose(&mut rng).unwrap()
                } else {
                    rng.random_range(0..aspects.len())
                };
                if !chosen.contains(&a) {
                    chosen.push(a);
                }
            }
            for a in chosen {
                let p = (1.0 + moods[qi][a]) / 2.0;
                let kw = keywords(aspects[a].id).choose(&mut rng).unwrap();
                let positive = rng.random_bool(p);
                parts.push(clause(&mut rng, kw, positive));
            }
            let source = SOURCES.choose(&mut rng).unwrap();
            let line = serde_json::json!({
                "id": format!("r{n:04}"),
                "quarter": q.to_string(),
                "text": parts.join(" "),
                "source": source,
            });
            writeln!(reviews, "{line}").unwrap();
        }
    }

    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join("synthetic_reviews.jsonl"), reviews).unwrap();
    std::fs::write(out.join("synthetic_revenue.csv"), revenue).unwrap();
    eprintln!(
        "wrote {n} reviews and {} revenue rows to {}",
        quarters.len(),
        out.display()
    );
}

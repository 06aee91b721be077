//! DR for the group counts of a large web corpus, one attribute at a time.
//!
//!     cargo run --example dr_score

use databias::repbias::{compute_dr, dr_max, GroupCounts};

fn main() {
    let attributes = [
        GroupCounts::from_pairs("gender", [("female", 235_461), ("male", 592_243)]),
        GroupCounts::from_pairs("age", [("young", 42_281), ("middle", 6_977), ("old", 12_101)]),
        GroupCounts::from_pairs(
            "religion",
            [("buddhism", 377), ("christian", 16_725), ("hinduism", 724), ("islam", 5_416), ("judaism", 4_227)],
        ),
    ];
    println!("{:<10} {:>3} {:>8} {:>8}  majority / minority", "attribute", "M", "DR", "max");
    for counts in &attributes {
        println!(
            "{:<10} {:>3} {:>8.4} {:>8.4}  {} / {}",
            counts.attribute,
            counts.m(),
            compute_dr(counts),
            dr_max(counts.m()),
            counts.majority().unwrap_or("-"),
            counts.minority().unwrap_or("-"),
        );
    }

    let balanced = GroupCounts::from_pairs("gender", [("female", 500), ("male", 500)]);
    let skewed = GroupCounts::from_pairs("gender", [("female", 0), ("male", 1000)]);
    println!("balanced: {:.4}, one-sided: {:.4}", compute_dr(&balanced), compute_dr(&skewed));
}

//! Reference filter semantics and filter generation.

use proptest::prelude::*;
use travisgo::model::{FilterSet, Post, Project};
use travisgo::Timecode;

use super::*;

/// Reference semantics, written independently of `FilterSet::matches`.
pub fn reference_match(f: &FilterSet, p: &Post) -> bool {
    if let Some(c) = f.category {
        if p.category != c {
            return false;
        }
    }
    if let Some(a) = &f.author {
        if p.author.as_str() != a.as_str() {
            return false;
        }
    }
    for t in &f.tags {
        let want = t.as_str().to_lowercase();
        if !p.hashtags.iter().any(|h| h.as_str().to_lowercase() == want) {
            return false;
        }
    }
    if let Some(t) = f.time_point {
        let end = p.end_ms.unwrap_or(p.start_ms);
        if !(p.start_ms.as_ms() <= t.as_ms() && t.as_ms() <= end.as_ms()) {
            return false;
        }
    }
    if let Some(q) = &f.text_query {
        let q = q.to_lowercase();
        let hit = p.body.to_lowercase().contains(&q) || p.comments.iter().any(|c| c.text.to_lowercase().contains(&q));
        if !hit {
            return false;
        }
    }
    true
}

/// Filters biased toward one anchor post, so that partial hits, misses,
/// and full matches are all common.
pub fn filter_for(project: &Project) -> impl Strategy<Value = FilterSet> {
    let posts = project.posts().to_vec();
    let n = posts.len().max(1);
    let anchored = || prop::bool::weighted(0.75);
    (
        0..n,
        prop::option::weighted(0.3, (anchored(), category())),
        prop::option::weighted(0.3, (anchored(), 0..NAME_POOL.len())),
        prop::option::weighted(0.3, (anchored(), prop::sample::select(TAG_POOL), any::<bool>())),
        prop::option::weighted(0.3, (anchored(), 0u64..300, 0u64..MAX_MS / 10)),
        prop::option::weighted(0.3, (anchored(), any::<prop::sample::Index>(), 1usize..6, any::<bool>(), "[a-z]{1,3}")),
    )
        .prop_map(move |(i, category, author, tag_pick, time, text)| {
            let anchor = posts.get(i);
            let category = category.map(|(a, c)| match anchor {
                Some(p) if a => p.category,
                _ => c,
            });
            let author = author.map(|(a, j)| match anchor {
                Some(p) if a => p.author.clone(),
                _ => name(j),
            });
            let tags = tag_pick
                .map(|(a, t, up)| {
                    let t = match anchor.and_then(|p| p.hashtags.first()) {
                        Some(h) if a => h.to_string(),
                        _ => t.to_string(),
                    };
                    tag(&if up { t.to_uppercase() } else { t.to_lowercase() })
                })
                .into_iter()
                .collect();
            let time_point = time.map(|(a, delta, cs)| {
                let ms = match anchor {
                    Some(p) if a => p.start_ms.as_ms() + delta * 10,
                    _ => cs * 10,
                };
                Timecode::from_ms(ms.min(MAX_MS)).unwrap()
            });
            let text_query = text.map(|(a, at, len, upper, random)| {
                let chars: Vec<char> = anchor.map_or(vec![], |p| p.body.chars().collect());
                if !a || chars.is_empty() {
                    return random;
                }
                let start = at.index(chars.len());
                let q: String = chars[start..(start + len).min(chars.len())].iter().collect();
                if upper { q.to_uppercase() } else { q }
            });
            FilterSet { category, author, tags, time_point, text_query }
        })
}

pub fn project_and_filter() -> impl Strategy<Value = (Project, FilterSet)> {
    arb_project(30).prop_flat_map(|p| {
        let f = filter_for(&p);
        (Just(p), f)
    })
}


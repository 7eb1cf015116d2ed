use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Category, Post, Project, Tag, Username};
use crate::syntax::timecode::Timecode;

/// Feed filter. Every criterion that is set must hold.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterSet {
    pub category: Option<Category>,
    /// Matches the post author only, not commenters.
    pub author: Option<Username>,
    pub tags: Vec<Tag>,
    pub time_point: Option<Timecode>,
    pub text_query: Option<String>,
}

impl FilterSet {
    pub fn is_empty(&self) -> bool {
        *self == FilterSet::default()
    }

    pub fn matches(&self, post: &Post) -> bool {
        self.category.is_none_or(|c| post.category == c)
            && self.author.as_ref().is_none_or(|a| &post.author == a)
            && self.tags.iter().all(|t| post.has_tag(t))
            && self.time_point.is_none_or(|t| post.covers(t))
            && self.text_query.as_deref().is_none_or(|q| {
                let q = q.to_lowercase();
                post.body.to_lowercase().contains(&q)
                    || post.comments.iter().any(|c| c.text.to_lowercase().contains(&q))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Presence {
    Active,
    Contributed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserStatus {
    pub name: Username,
    pub status: Presence,
}

fn name_order(a: &Username, b: &Username) -> std::cmp::Ordering {
    a.as_str()
        .to_lowercase()
        .cmp(&b.as_str().to_lowercase())
        .then_with(|| a.cmp(b))
}

impl Project {
    pub fn filter_posts(&self, filter: &FilterSet) -> Vec<&Post> {
        self.posts.iter().filter(|p| filter.matches(p)).collect()
    }

    /// Vocabulary entries starting with `prefix` (ignoring case), most used
    /// first. Usage counts posts whose hashtags include the tag.
    pub fn suggest_tags(&self, prefix: &str) -> Vec<&Tag> {
        let prefix = prefix.to_lowercase();
        let mut hits: Vec<(usize, String, &Tag)> = self
            .tag_vocabulary
            .iter()
            .filter_map(|tag| {
                let folded = tag.folded();
                folded.starts_with(&prefix).then(|| {
                    let uses = self.posts.iter().filter(|p| p.has_tag(tag)).count();
                    (uses, folded, tag)
                })
            })
            .collect();
        hits.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        hits.into_iter().map(|(_, _, tag)| tag).collect()
    }

    /// Connected names as ACTIVE, then everyone else who wrote a post or a
    /// comment as CONTRIBUTED; each group sorted by name, ignoring case.
    pub fn user_list(&self, connected: &BTreeSet<Username>) -> Vec<UserStatus> {
        let mut statuses: BTreeMap<&Username, Presence> = connected
            .iter()
            .map(|name| (name, Presence::Active))
            .collect();
        let authors = self
            .posts
            .iter()
            .flat_map(|p| std::iter::once(&p.author).chain(p.comments.iter().map(|c| &c.author)));
        for author in authors {
            statuses.entry(author).or_insert(Presence::Contributed);
        }
        let mut list: Vec<UserStatus> = statuses
            .into_iter()
            .map(|(name, status)| UserStatus {
                name: name.clone(),
                status,
            })
            .collect();
        list.sort_by(|a, b| a.status.cmp(&b.status).then_with(|| name_order(&a.name, &b.name)));
        list
    }
}

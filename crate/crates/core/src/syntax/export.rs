//! Human-readable Markdown export for hand-ins and portfolios.

use std::fmt::Write;

use crate::model::{Post, Project, Username};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportOrder {
    /// Posts in feed order.
    #[default]
    Feed,
    /// One section per author, authors in order of their first post.
    ByAuthor,
}

fn span(post: &Post) -> String {
    match post.end_ms {
        Some(end) => format!("{} – {}", post.start_ms, end),
        None => post.start_ms.to_string(),
    }
}

fn write_post(out: &mut String, level: &str, post: &Post) {
    let _ = writeln!(out, "{level} [{}] {} · @{}", span(post), post.category, post.author);
    out.push('\n');
    for line in post.body.split('\n') {
        let _ = writeln!(out, "{line}  ");
    }
    if !post.comments.is_empty() {
        out.push('\n');
        for c in &post.comments {
            let _ = writeln!(out, "> **@{}:** {}", c.author, c.text);
        }
    }
    out.push('\n');
}

pub fn export_document(project: &Project, order: ExportOrder) -> String {
    let mut out = String::new();
    let title = match project.title() {
        "" => "Untitled project",
        t => t,
    };
    let _ = writeln!(out, "# {title}\n");
    if !project.description().is_empty() {
        let _ = writeln!(out, "{}\n", project.description());
    }
    let _ = writeln!(out, "- Media: <{}>", project.media_url());
    let tags: Vec<String> = project
        .tag_vocabulary()
        .iter()
        .map(|t| format!("#{t}"))
        .collect();
    let _ = writeln!(out, "- Tags: {}", if tags.is_empty() { "none".into() } else { tags.join(" ") });
    let _ = writeln!(out, "- Posts: {}\n", project.posts().len());

    match order {
        ExportOrder::Feed => {
            for post in project.posts() {
                write_post(&mut out, "##", post);
            }
        }
        ExportOrder::ByAuthor => {
            let mut authors: Vec<&Username> = Vec::new();
            for post in project.posts() {
                if !authors.contains(&&post.author) {
                    authors.push(&post.author);
                }
            }
            for author in authors {
                let _ = writeln!(out, "## @{author}\n");
                for post in project.posts().iter().filter(|p| &p.author == author) {
                    write_post(&mut out, "###", post);
                }
            }
        }
    }
    out
}

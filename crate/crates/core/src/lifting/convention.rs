use serde::{Deserialize, Serialize};

/// How a recognized surface span becomes a formatted AP name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Convention {
    /// Lowercased words joined by `_`: `go to waste basket` → `go_to_waste_basket`.
    IdentitySnake,
    /// Leading verb (plus trailing particles) and the remaining noun phrase,
    /// each snake-cased and suffixed: `go to waste basket` → `go_to_v waste_basket_n`.
    VerbNoun {
        #[serde(default = "default_particles")]
        particles: Vec<String>,
        #[serde(default = "default_verb_suffix")]
        verb_suffix: String,
        #[serde(default = "default_noun_suffix")]
        noun_suffix: String,
    },
    /// Span text kept verbatim apart from whitespace normalization.
    Raw,
    /// Snake-cased span with a fixed trailing word: `blue` → `blue_room`.
    Suffix { suffix: String },
}

fn default_particles() -> Vec<String> {
    [
        "to", "near", "into", "onto", "through", "thru", "at", "in", "by", "up", "down", "off",
        "out", "on", "over", "toward", "towards", "around", "from", "away", "back",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn default_verb_suffix() -> String {
    "_v".into()
}

fn default_noun_suffix() -> String {
    "_n".into()
}

impl Convention {
    pub fn verb_noun() -> Self {
        Convention::VerbNoun {
            particles: default_particles(),
            verb_suffix: default_verb_suffix(),
            noun_suffix: default_noun_suffix(),
        }
    }
}

fn words_lower(span: &str) -> Vec<String> {
    span.split_whitespace().map(str::to_lowercase).collect()
}

/// Formats a recognized span under `convention`.
pub fn format_ap(span: &str, convention: &Convention) -> String {
    match convention {
        Convention::IdentitySnake => words_lower(span).join("_"),
        Convention::Raw => span.split_whitespace().collect::<Vec<_>>().join(" "),
        Convention::Suffix { suffix } => {
            let mut words = words_lower(span);
            if words.last().map(String::as_str) != Some(suffix.as_str()) {
                words.push(suffix.clone());
            }
            words.join("_")
        }
        Convention::VerbNoun {
            particles,
            verb_suffix,
            noun_suffix,
        } => {
            let words = words_lower(span);
            let Some((first, rest)) = words.split_first() else {
                return String::new();
            };
            let particle_run = rest
                .iter()
                .take_while(|w| particles.iter().any(|p| p == *w))
                .count();
            let verb = std::iter::once(first)
                .chain(&rest[..particle_run])
                .cloned()
                .collect::<Vec<_>>()
                .join("_");
            let noun = rest[particle_run..].join("_");
            if noun.is_empty() {
                format!("{verb}{verb_suffix}")
            } else {
                format!("{verb}{verb_suffix} {noun}{noun_suffix}")
            }
        }
    }
}

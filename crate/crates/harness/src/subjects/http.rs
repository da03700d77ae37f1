use std::sync::OnceLock;
use std::time::{Duration, Instant};

use aiq_core::{EndpointConfig, FeedbackItem, Question};
use regex::Regex;

use super::{Reply, Subject};

/// Transport retries for engine requests; all attempts share the question's
/// time budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 2,
            backoff: Duration::from_millis(500),
        }
    }
}

/// Substitutes the percent-encoded prompt for `{query}`.
pub fn render_url(template: &str, prompt: &str) -> String {
    let encoded: String = url::form_urlencoded::byte_serialize(prompt.as_bytes()).collect();
    template.replace("{query}", &encoded)
}

fn tag_pattern() -> &'static Regex {
    static TAGS: OnceLock<Regex> = OnceLock::new();
    TAGS.get_or_init(|| Regex::new(r"<[^>]*>").expect("static regex"))
}

fn clean_snippet(raw: &str) -> String {
    let text = tag_pattern().replace_all(raw, " ");
    let text = text
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&nbsp;", " ")
        .replace("&amp;", "&");
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Applies the extraction rule to a page: capture group 1 (or the whole
/// match) of every match, in page order, with markup stripped.
pub fn extract_items(body: &str, rule: &Regex) -> Vec<FeedbackItem> {
    rule.captures_iter(body)
        .filter_map(|c| c.get(1).or_else(|| c.get(0)))
        .map(|m| clean_snippet(m.as_str()))
        .filter(|s| !s.is_empty())
        .map(FeedbackItem::Text)
        .collect()
}

/// A search or answer engine queried over HTTP.
pub struct HttpEngineSubject {
    config: EndpointConfig,
    rule: Regex,
    retry: RetryPolicy,
}

impl HttpEngineSubject {
    pub fn new(config: EndpointConfig) -> Result<Self, regex::Error> {
        let rule = Regex::new(&config.extraction)?;
        Ok(HttpEngineSubject {
            config,
            rule,
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn fetch(&self, url: &str, timeout: Duration) -> Result<String, ureq::Error> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        agent.get(url).call()?.body_mut().read_to_string()
    }
}

impl Subject for HttpEngineSubject {
    fn respond(&mut self, question: &Question, budget: Duration) -> Reply {
        let started = Instant::now();
        let url = render_url(&self.config.url_template, &question.prompt);
        let mut last_error = String::new();
        let mut attempts = 0;
        for attempt in 0..=self.retry.retries {
            let Some(remaining) = budget
                .checked_sub(started.elapsed())
                .filter(|d| !d.is_zero())
            else {
                return Reply::NoReply;
            };
            attempts += 1;
            match self.fetch(&url, remaining) {
                Ok(body) => {
                    let items = extract_items(&body, &self.rule);
                    if items.is_empty() {
                        return Reply::Transport(format!("no results extracted from {url}"));
                    }
                    return Reply::Items(items);
                }
                Err(ureq::Error::Timeout(_)) => return Reply::NoReply,
                Err(e) => {
                    log::debug!("{url}: attempt {} failed: {e}", attempt + 1);
                    last_error = e.to_string();
                }
            }
            if attempt < self.retry.retries {
                if started.elapsed() + self.retry.backoff >= budget {
                    break;
                }
                std::thread::sleep(self.retry.backoff);
            }
        }
        Reply::Transport(format!("{last_error} (after {attempts} attempts)"))
    }
}

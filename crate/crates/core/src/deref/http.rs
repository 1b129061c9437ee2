use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use ureq::Agent;
use url::Url;

use super::{Resolution, Resolver, DEFAULT_MAX_REDIRECTS, RDF_CONTENT_TYPES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpResolverConfig {
    pub timeout: Duration,
    pub max_redirects: usize,
    /// Minimum spacing between consecutive requests.
    pub request_delay: Duration,
    pub user_agent: String,
}

impl Default for HttpResolverConfig {
    fn default() -> Self {
        HttpResolverConfig {
            timeout: Duration::from_secs(10),
            max_redirects: DEFAULT_MAX_REDIRECTS,
            request_delay: Duration::ZERO,
            user_agent: concat!("lodprobe/", env!("CARGO_PKG_VERSION")).to_owned(),
        }
    }
}

/// Live resolver. Sends `HEAD` (retrying with `GET` on 405/501) with an
/// `Accept` header listing the RDF media types, and follows redirects by
/// hand so every status is recorded.
#[derive(Debug)]
pub struct HttpResolver {
    agent: Agent,
    config: HttpResolverConfig,
    accept: String,
    last_request: Mutex<Option<Instant>>,
}

impl HttpResolver {
    pub fn new(config: HttpResolverConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .max_redirects(0)
            .http_status_as_error(false)
            .user_agent(config.user_agent.as_str())
            .build()
            .into();
        let accept = RDF_CONTENT_TYPES
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if i == 0 {
                    (*t).to_owned()
                } else {
                    format!("{t};q=0.9")
                }
            })
            .collect::<Vec<_>>()
            .join(", ");
        HttpResolver {
            agent,
            config,
            accept,
            last_request: Mutex::new(None),
        }
    }

    pub fn config(&self) -> &HttpResolverConfig {
        &self.config
    }

    fn pace(&self) {
        if self.config.request_delay.is_zero() {
            return;
        }
        let mut last = self.last_request.lock().unwrap();
        if let Some(t) = *last {
            let wait = self.config.request_delay.saturating_sub(t.elapsed());
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
        *last = Some(Instant::now());
    }

    fn request(
        &self,
        uri: &str,
        get: bool,
    ) -> Result<(u16, Option<String>, Option<String>), ureq::Error> {
        self.pace();
        let response = if get {
            self.agent.get(uri).header("Accept", &self.accept).call()?
        } else {
            self.agent.head(uri).header("Accept", &self.accept).call()?
        };
        let header = |name: &str| {
            response
                .headers()
                .get(name)
                .and_then(|v| v.to_str().ok())
                .map(str::to_owned)
        };
        Ok((
            response.status().as_u16(),
            header("content-type"),
            header("location"),
        ))
    }
}

impl Default for HttpResolver {
    fn default() -> Self {
        Self::new(HttpResolverConfig::default())
    }
}

impl Resolver for HttpResolver {
    fn resolve(&self, uri: &str) -> Resolution {
        let mut chain = Vec::new();
        let mut target = match Url::parse(uri) {
            Ok(u) => u,
            Err(e) => return Resolution::failed(uri, chain, e.to_string()),
        };
        loop {
            let mut outcome = self.request(target.as_str(), false);
            if let Ok((405 | 501, _, _)) = outcome {
                outcome = self.request(target.as_str(), true);
            }
            let (status, content_type, location) = match outcome {
                Ok(parts) => parts,
                Err(e) => return Resolution::failed(uri, chain, e.to_string()),
            };
            chain.push(status);
            if !(300..400).contains(&status) || status == 304 {
                return Resolution {
                    requested_uri: uri.to_owned(),
                    status_chain: chain,
                    content_type,
                    transport_error: None,
                };
            }
            if chain.len() > self.config.max_redirects {
                return Resolution::failed(
                    uri,
                    chain,
                    format!("redirect limit of {} exceeded", self.config.max_redirects),
                );
            }
            let Some(location) = location else {
                return Resolution::failed(uri, chain, "redirect without location");
            };
            target = match target.join(&location) {
                Ok(u) => u,
                Err(e) => {
                    return Resolution::failed(
                        uri,
                        chain,
                        format!("bad location {location:?}: {e}"),
                    )
                }
            };
        }
    }

    fn max_redirects(&self) -> usize {
        self.config.max_redirects
    }
}

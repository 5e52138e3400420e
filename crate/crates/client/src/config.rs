//! Where the service lives and how long to wait for it.

use std::time::Duration;

pub const SERVICE_URL_ENV: &str = "TFPC_SERVICE_URL";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("E_NO_SERVICE_URL: pass --service-url, set {SERVICE_URL_ENV} or add service_url to tfp.conf")]
    Missing,
    #[error("E_BAD_SERVICE_URL: {url}: {reason}")]
    Bad { url: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientConfig {
    /// Absolute http(s) URL without a trailing slash.
    pub service_url: String,
    pub timeout: Duration,
}

fn check(url: &str) -> Result<String, ConfigError> {
    let bad = |reason: &str| ConfigError::Bad {
        url: url.to_string(),
        reason: reason.to_string(),
    };
    let parsed = url::Url::parse(url).map_err(|e| bad(&e.to_string()))?;
    if !matches!(parsed.scheme(), "http" | "https") {
        return Err(bad("scheme must be http or https"));
    }
    if parsed.host_str().is_none_or(str::is_empty) {
        return Err(bad("missing host"));
    }
    Ok(url.trim_end_matches('/').to_string())
}

impl ClientConfig {
    /// Picks the service URL by precedence: flag, then environment, then
    /// `tfp.conf`. Blank values count as absent.
    pub fn resolve(
        flag: Option<&str>,
        env: Option<&str>,
        conf: Option<&str>,
        timeout: Duration,
    ) -> Result<ClientConfig, ConfigError> {
        let url = [flag, env, conf]
            .into_iter()
            .flatten()
            .map(str::trim)
            .find(|s| !s.is_empty())
            .ok_or(ConfigError::Missing)?;
        Ok(ClientConfig {
            service_url: check(url)?,
            timeout,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pick(flag: Option<&str>, env: Option<&str>, conf: Option<&str>) -> Result<String, ConfigError> {
        ClientConfig::resolve(flag, env, conf, DEFAULT_TIMEOUT).map(|c| c.service_url)
    }

    #[test]
    fn precedence() {
        let (f, e, c) = (Some("http://flag"), Some("http://env"), Some("http://conf"));
        assert_eq!(pick(f, e, c).unwrap(), "http://flag");
        assert_eq!(pick(None, e, c).unwrap(), "http://env");
        assert_eq!(pick(None, Some("  "), c).unwrap(), "http://conf");
        assert_eq!(pick(None, None, None).unwrap_err(), ConfigError::Missing);
    }

    #[test]
    fn only_absolute_http() {
        assert_eq!(pick(Some("https://h:9/x/"), None, None).unwrap(), "https://h:9/x");
        assert!(pick(Some("ftp://h"), None, None).is_err());
        assert!(pick(Some("localhost:8080"), None, None).is_err());
        assert!(pick(Some("/tfps"), None, None).is_err());
    }
}

//! Column names of the CICIoT2023 flow-feature CSVs and the bundled data files.

/// The 46 flow features, in the order the dataset publishes them.
pub const CICIOT2023_FEATURES: [&str; 46] = [
    "flow_duration",
    "Header_Length",
    "Protocol Type",
    "Duration",
    "Rate",
    "Srate",
    "Drate",
    "fin_flag_number",
    "syn_flag_number",
    "rst_flag_number",
    "psh_flag_number",
    "ack_flag_number",
    "ece_flag_number",
    "cwr_flag_number",
    "ack_count",
    "syn_count",
    "fin_count",
    "urg_count",
    "rst_count",
    "HTTP",
    "HTTPS",
    "DNS",
    "Telnet",
    "SMTP",
    "SSH",
    "IRC",
    "TCP",
    "UDP",
    "DHCP",
    "ARP",
    "ICMP",
    "IPv",
    "LLC",
    "Tot sum",
    "Min",
    "Max",
    "AVG",
    "Std",
    "Tot size",
    "IAT",
    "Number",
    "Magnitue",
    "Radius",
    "Covariance",
    "Variance",
    "Weight",
];

pub const DEFAULT_LABEL_COLUMN: &str = "label";

/// Canonical top-20 ranking, one feature per line.
pub const CANONICAL_TOP20_FILE: &str = include_str!("../../data/top20_features.txt");

/// Default raw-label to family mapping.
pub const LABEL_FAMILIES_FILE: &str = include_str!("../../data/label_families.csv");

pub fn parse_feature_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

pub fn canonical_top20() -> Vec<String> {
    parse_feature_list(CANONICAL_TOP20_FILE)
}

pub fn default_schema() -> Vec<String> {
    CICIOT2023_FEATURES.iter().map(|s| s.to_string()).collect()
}

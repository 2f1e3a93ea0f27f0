# utils functions for trigzeros
import hashlib
import json
import logging
import os
import sys
import time

import numpy as np
import yaml

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = ('universality', 'threshold', 'small-ball', 'cramer', 'edgeworth')
TEMPLATE_PATH = os.path.join(os.path.dirname(__file__), 'config', 'template.yaml')


def make_stream(seed, *keys):
    """
    Build a counter-based random stream keyed by a master seed and integer keys.

    The same (seed, keys) always gives the same stream, whichever process or
    thread consumes it.

    Args:
        seed (int): 64-bit master seed
        *keys (int): extra identifiers, typically (n, trial index)
    Returns:
        numpy.random.Generator: Philox-backed generator
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def config_hash(config):
    """sha256 of the canonical JSON form of a config mapping."""
    canonical = json.dumps(config, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def generate_config_template(output_path="config_template.yaml"):
    """
    Copies the shipped template YAML suite configuration, one block per experiment kind.
    Args:
        output_path (str): Path where the template file should be saved
    """
    with open(TEMPLATE_PATH) as f:
        yaml_content = f.read()

    with open(output_path, 'w') as f:
        f.write(yaml_content)

    logger.info("Configuration template saved to: %s", output_path)
    return output_path


def validate_config(config_or_path):
    """
    Validates that a suite configuration contains all required parameters.

    Args:
        config_or_path: Either a config dictionary or path to a YAML/JSON file

    Returns:
        tuple: (is_valid, missing_params, validation_messages)
    """
    param_class = {
        'universality': ['law', 'n_list', 'trials'],
        'threshold': ['law', 'n_list', 'trials'],
        'small-ball': ['law', 'n_list', 'trials', 'gamma'],
        'cramer': ['law', 'b', 'C', 'R'],
        'edgeworth': ['law', 'n'],
    }

    if isinstance(config_or_path, dict):
        config = config_or_path
    else:
        try:
            with open(config_or_path, 'r') as f:
                config = yaml.safe_load(f)
        except Exception as e:
            return False, [], [f"Error reading config file: {e}"]

    if config is None:
        config = {}
    if not isinstance(config, dict):
        return False, [], ["Config must be a mapping with an 'experiments' list"]

    missing_params = []
    validation_messages = []

    experiments = config.get('experiments', [])
    if not isinstance(experiments, list):
        validation_messages.append("'experiments' must be a list")
        experiments = []

    for index, exp in enumerate(experiments):
        label = exp.get('name', f'experiments[{index}]') if isinstance(exp, dict) else f'experiments[{index}]'
        if not isinstance(exp, dict):
            validation_messages.append(f"{label}: entry must be a mapping")
            continue
        kind = exp.get('kind')
        if kind not in param_class:
            validation_messages.append(
                f"{label}: kind must be one of {', '.join(EXPERIMENT_KINDS)}, got {kind!r}")
            continue
        required = param_class[kind]
        if kind == 'edgeworth' and exp.get('mode') == 'kac-functional':
            required = ['law'] + ([] if 'n_list' in exp else ['n'])
        for param in required:
            if param not in exp:
                missing_params.append(f"{label}.{param}")

        if 'trials' in exp:
            try:
                if int(exp['trials']) < 1:
                    validation_messages.append(f"{label}: trials must be >= 1, got {exp['trials']}")
            except (ValueError, TypeError):
                validation_messages.append(f"{label}: trials must be an integer, got {exp['trials']!r}")

        if 'interval' in exp:
            interval = exp['interval']
            if not (isinstance(interval, (list, tuple)) and len(interval) == 2
                    and float(interval[0]) < float(interval[1])):
                validation_messages.append(f"{label}: interval must be [lo, hi] with lo < hi")

        if 'r' in exp and not 1.2 < float(exp['r']) < 1.5:
            validation_messages.append(f"{label}: r must lie in (1.2, 1.5), got {exp['r']}")

        if 'n_list' in exp:
            n_list = exp['n_list']
            if not isinstance(n_list, (list, tuple)) or not n_list or any(int(n) < 1 for n in n_list):
                validation_messages.append(f"{label}: n_list must be a nonempty list of positive integers")

    is_valid = len(missing_params) == 0 and len(validation_messages) == 0

    if missing_params:
        validation_messages.append(f"Missing required parameters: {', '.join(missing_params)}")

    return is_valid, missing_params, validation_messages


def load_config(config_path):
    """
    Reads a YAML or JSON suite configuration and validates it.
    Args:
        config_path (str): Path to the configuration file.
    Returns:
        dict: Configuration parameters.
    Raises:
        ConfigError: unreadable or invalid configuration
    """
    from .errors import ConfigError

    try:
        with open(config_path, 'r') as f:
            config = yaml.safe_load(f)
    except Exception as e:
        raise ConfigError(f"Error reading config file {config_path}: {e}") from e

    is_valid, _, validation_messages = validate_config(config if config is not None else {})
    if not is_valid:
        raise ConfigError("Configuration validation failed:\n" +
                          "\n".join(f"  - {message}" for message in validation_messages))
    return config if config is not None else {}


def setup_config(config_path):
    """
    Loads a suite configuration for the CLI; prints validation errors and exits 1.
    """
    from .errors import ConfigError

    try:
        return load_config(config_path)
    except ConfigError as e:
        print(str(e))
        sys.exit(1)


def write_csv(path, header, rows):
    """Write rows with LF endings and shortest round-trip float formatting."""
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(','.join(header) + '\n')
        for row in rows:
            f.write(','.join(_csv_cell(value) for value in row) + '\n')


def _csv_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_log_header(log_file):
    log_file.write('time,event,n\n')


def write_log(log_file, start_time, event_name, count):
    log_file.write(str(time.time()-start_time)+','+event_name+','+str(count)+'\n')


def initialize_log(log_dir=None):
    """Open a fresh ``<timestamp>_event.log`` in log_dir and write the header."""
    if log_dir is None:
        log_dir = os.path.join(os.getcwd(), 'log')
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)
    log_file_time = int(np.floor(time.time()))
    log_file_name = os.path.join(log_dir, str(log_file_time) + '_event.log')
    log_file = open(os.path.normpath(log_file_name), 'w')
    write_log_header(log_file)
    return log_file

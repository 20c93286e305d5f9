#!/usr/bin/env python3
# Resource Provider - Manages configuration and logging

import os
import sys
import copy
import logging
from logging.handlers import RotatingFileHandler

import yaml

LOGGER_NAME = 'debuglin'

DEFAULT_CONFIG = {
    'logging': {
        'level': 'WARNING',
        'file': None,
        'max_size_mb': 10,
        'backup_count': 3,
    },
    'solvers': {
        'max_brute': 24,
        'threads': 1,
    },
    'verifier': {
        'seed': 0,
        'orders': 5,
        'lemma_subsets': 64,
        'progress': False,
    },
}


class ResourceProvider:
    """
    Provides centralized access to configuration and logging resources
    """

    def __init__(self, config_path='config.yaml'):
        """
        Initialize the resource provider

        Args:
            config_path: Path to the configuration file
        """
        self.config_path = config_path

        # Defaults first, file values merged on top
        self.config = copy.deepcopy(DEFAULT_CONFIG)
        _recursive_update(self.config, self._load_config(config_path))

        self.logger = self._configure_logging()

        self.logger.debug(f"ResourceProvider initialized from {config_path}")

    def _load_config(self, config_path):
        """
        Load configuration from YAML file

        Args:
            config_path: Path to the configuration file

        Returns:
            dict: Configuration dictionary (empty when the file is missing)
        """
        if config_path is None:
            return {}
        try:
            if os.path.exists(config_path):
                with open(config_path, 'r', encoding='utf-8') as f:
                    config = yaml.safe_load(f)
                if config is not None and not isinstance(config, dict):
                    print(f"Warning: {config_path} is not a mapping, using defaults", file=sys.stderr)
                    return {}
                return config or {}
            print(f"Warning: Config file not found at {config_path}, using defaults", file=sys.stderr)
            return {}
        except (OSError, yaml.YAMLError) as e:
            print(f"Error loading config: {e}", file=sys.stderr)
            return {}

    def _configure_logging(self):
        """
        Configure the project logger based on configuration

        Returns:
            logging.Logger: Configured logger
        """
        log_config = self.config.get('logging', {})
        log_level_str = str(log_config.get('level', 'WARNING'))
        log_level = getattr(logging, log_level_str.upper(), logging.WARNING)

        logger = logging.getLogger(LOGGER_NAME)
        logger.setLevel(log_level)
        logger.propagate = False

        # Remove existing handlers
        for handler in logger.handlers[:]:
            logger.removeHandler(handler)
            handler.close()

        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )

        # Console handler; stdout is reserved for command results
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(log_level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        log_file = log_config.get('file')
        if log_file:
            log_dir = os.path.dirname(log_file)
            if log_dir:
                os.makedirs(log_dir, exist_ok=True)

            max_size_mb = log_config.get('max_size_mb', 10)
            backup_count = log_config.get('backup_count', 3)

            file_handler = RotatingFileHandler(
                log_file,
                maxBytes=max_size_mb * 1024 * 1024,
                backupCount=backup_count,
                encoding='utf-8',
            )
            file_handler.setLevel(log_level)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        return logger

    def get_config(self):
        """
        Get the configuration dictionary

        Returns:
            dict: Configuration dictionary
        """
        return self.config

    def get_section(self, name):
        """
        Get one configuration section, falling back to the built-in defaults

        Args:
            name: Top-level section name, e.g. 'solvers'

        Returns:
            dict: The section (never None)
        """
        return self.config.get(name) or copy.deepcopy(DEFAULT_CONFIG.get(name, {}))

    def get_logger(self, name=None):
        """
        Get the project logger or one of its children

        Args:
            name: Optional child name, e.g. 'solvers' gives 'debuglin.solvers'

        Returns:
            logging.Logger: Logger
        """
        if name:
            return self.logger.getChild(name)
        return self.logger

    def clone_with_custom_config(self, custom_config_updates):
        """
        Create a new ResourceProvider with a custom configuration

        Args:
            custom_config_updates: Dictionary of configuration updates to apply

        Returns:
            ResourceProvider: New resource provider with updated configuration
        """
        new_provider = ResourceProvider.__new__(ResourceProvider)
        new_provider.config_path = self.config_path
        new_provider.config = copy.deepcopy(self.config)
        _recursive_update(new_provider.config, custom_config_updates)

        # Share the same logger
        new_provider.logger = self.logger

        return new_provider


def _recursive_update(base_dict, update_dict):
    """
    Recursively update a dictionary with another

    Args:
        base_dict: Base dictionary to update
        update_dict: Dictionary of updates to apply
    """
    for key, value in update_dict.items():
        if isinstance(value, dict) and isinstance(base_dict.get(key), dict):
            _recursive_update(base_dict[key], value)
        else:
            base_dict[key] = value

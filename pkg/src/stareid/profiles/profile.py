"""
Manages the loading of profiles and instantiation of modules from configuration.

A profile is a JSON file naming one arm of the ablation study: which
aggregator to run and which loss terms to switch on.
"""

import logging
from os.path import dirname, isfile, join
import json
import importlib

from stareid.errors import ConfigurationError

logger = logging.getLogger(__name__)

AGGREGATORS = {
    'sta': 'stareid.modules.aggregation.sta_fusion.StaFusion',
    'sta_no_fusion': 'stareid.modules.aggregation.sta_no_fusion.StaWeightedSum',
    'average': 'stareid.modules.aggregation.average.AveragePooling',
    'none': 'stareid.modules.aggregation.frame_level.FrameLevel',
}

# Rows of the ablation table, weakest first.
ABLATION_ARMS = (
    'baseline',
    'baseline_tl',
    'baseline_tl_avg',
    'baseline_tl_sta',
    'baseline_tl_sta_fusion',
    'baseline_tl_sta_fusion_reg',
)


def load_profile(profile_configuration):
    """A packaged profile by name, else a JSON file at the given path."""
    packaged = join(dirname(__file__), profile_configuration + '.json')
    fpath = packaged if isfile(packaged) else profile_configuration
    if not isfile(fpath):
        raise ConfigurationError("Unknown profile {!r}; packaged profiles are {}.".format(
            profile_configuration, ', '.join(ABLATION_ARMS)))

    logger.debug("Open profile file = {}.".format(fpath))
    with open(fpath) as f:
        return json.load(f)


def instantiate_class(full_class_name, **parameters):
    module_name, _, class_name = full_class_name.rpartition('.')
    module_class = getattr(importlib.import_module(module_name), class_name)
    return module_class(parameters)


def instantiate_aggregator(name, **parameters):
    if name not in AGGREGATORS:
        raise ValueError("Unknown aggregator {!r}; choose from {}.".format(name, sorted(AGGREGATORS)))
    return instantiate_class(AGGREGATORS[name], **parameters)

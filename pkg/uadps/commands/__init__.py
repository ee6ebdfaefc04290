# coding=utf-8
from flask import Blueprint

from ..reports import fmt

commands = Blueprint('commands', __name__, cli_group=None)
commands.add_app_template_filter(fmt, 'fmt')
from . import refine, simulate, evaluate, check_grad, sweep

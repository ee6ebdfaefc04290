# coding=utf-8
import logging

from flask import Flask

from config import config


def create_app(config_name):
    app = Flask(__name__)
    app.config.from_object(config[config_name])
    app.logger.setLevel(app.config['LOG_LEVEL'])

    if not app.config['DEBUG'] and not app.config['TESTING']:
        # keep a persistent record of production runs
        if app.config.get('LOG_FILE') is not None:
            file_handler = logging.FileHandler(app.config['LOG_FILE'])
            file_handler.setLevel(logging.INFO)
            file_handler.setFormatter(logging.Formatter(
                '%(asctime)s %(levelname)s %(name)s: %(message)s'))
            app.logger.addHandler(file_handler)

    from .commands import commands as commands_blueprint

    app.register_blueprint(commands_blueprint)

    return app

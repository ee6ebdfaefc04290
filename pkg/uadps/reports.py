# coding=utf-8
import collections
import io
import os

import bleach
from flask import render_template
from markdown import markdown

from . import keyvalue

allowed_tags = ['a', 'b', 'blockquote', 'code', 'em', 'h1', 'h2', 'h3', 'i',
                'li', 'ol', 'p', 'pre', 'strong', 'table', 'tbody', 'td',
                'th', 'thead', 'tr', 'ul']

SourceSummary = collections.namedtuple(
    'SourceSummary', 'estimate output input_si_sdr output_si_sdr')


def fmt(value):
    if value is None:
        return '-'
    return '{:.4g}'.format(value)


def to_html(text):
    return bleach.clean(markdown(text, extensions=['tables'],
                                 output_format='html'),
                        tags=allowed_tags, strip=True)


def render_refine_report(config, mixture, n_channels, sources, reports,
                         final_quadratic=None):
    return render_template('report/refine.md', config=config,
                           mixture=mixture, n_channels=n_channels,
                           sources=sources, reports=reports,
                           final_quadratic=final_quadratic)


def write_refine_reports(out_dir, config, mixture, n_channels, sources,
                         reports, final_quadratic=None):
    """report.txt (key=value records), report.md and report.html."""
    with io.open(os.path.join(out_dir, 'report.txt'), 'w',
                 encoding='utf-8') as f:
        for key, value in config.items():
            f.write(u'{}={}\n'.format(key, keyvalue.format_value(value)))
        for report in reports:
            f.write(u'{}\n'.format(keyvalue.format_record(report.as_record())))
        for k, source in enumerate(sources):
            f.write(u'{}\n'.format(keyvalue.format_record(
                collections.OrderedDict([
                    ('source', k), ('output', source.output),
                    ('input_si_sdr_db', source.input_si_sdr),
                    ('output_si_sdr_db', source.output_si_sdr)]))))
        if final_quadratic is not None:
            f.write(u'final_quadratic={!r}\n'.format(final_quadratic))

    text = render_refine_report(config, mixture, n_channels, sources,
                                reports, final_quadratic)
    with io.open(os.path.join(out_dir, 'report.md'), 'w',
                 encoding='utf-8') as f:
        f.write(text)
    with io.open(os.path.join(out_dir, 'report.html'), 'w',
                 encoding='utf-8') as f:
        f.write(to_html(text))


def render_evaluation(rows, mean):
    return render_template('report/evaluate.txt', rows=rows, mean=mean)

# coding=utf-8
"""Flat ``key=value`` text, used for config files, scene manifests, .env
files and machine-readable metric rows."""
import io


def parse_lines(lines):
    values = {}
    for line in lines:
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        var = line.split('=', 1)
        if len(var) == 2:
            values[var[0].strip()] = var[1].strip()
    return values


def load(path):
    with io.open(path, encoding='utf-8') as f:
        return parse_lines(f)


def format_value(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ','.join(format_value(v) for v in value)
    return str(value)


def format_record(mapping):
    """One line, space separated; values must not contain spaces."""
    return ' '.join('{}={}'.format(k, format_value(v))
                    for k, v in mapping.items())


def dump(mapping, path, header=None):
    with io.open(path, 'w', encoding='utf-8') as f:
        if header:
            f.write(u'# {}\n'.format(header))
        for key, value in mapping.items():
            f.write(u'{}={}\n'.format(key, format_value(value)))
